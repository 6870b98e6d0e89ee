"""Day-ahead electricity market bidding games between Q-learning generator agents.

Two interchangeable Q-function backends are provided: a plain MLP and a
hybrid dense/quantum network whose middle layer is a 5-qubit variational
circuit evaluated on the built-in statevector simulator (`qbidsim.qsim`).
"""

__version__ = "0.1.0"
