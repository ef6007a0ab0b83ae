"""Exception hierarchy.

Every error carries an exit code used by the command line front end:
2 for a failed verification, 3 for numerical inconclusiveness and 4 for
bad input.
"""


class YosidaLabError(Exception):
    exit_code = 1


class InvalidInput(YosidaLabError, ValueError):
    exit_code = 4


class InvalidOperator(InvalidInput):
    pass


class InvalidPerturbation(InvalidInput):
    pass


class TooLarge(InvalidInput):
    pass


class MeshMismatch(InvalidInput):
    pass


class NumericalError(YosidaLabError, ArithmeticError):
    exit_code = 3


class SingularResolvent(NumericalError):
    def __init__(self, eigenvalue, lam):
        self.eigenvalue = complex(eigenvalue)
        self.lam = complex(lam)
        super().__init__(f"{self.lam} is numerically in the spectrum (eigenvalue {self.eigenvalue})")


class ExpOverflow(NumericalError):
    pass


class SpectrumFailure(NumericalError):
    pass


class BranchCutViolation(InvalidInput):
    pass


class InconclusiveVerification(NumericalError):
    pass


class DivergentClassP(NumericalError):
    pass


class ContourFailure(NumericalError):
    pass


class LambdaTooSmall(InvalidInput):
    pass


class NotHyperbolic(InvalidInput):
    pass


class BaseNotHyperbolic(InvalidInput):
    pass


class DiscretizationInconsistency(YosidaLabError):
    exit_code = 2

    def __init__(self, message, discrete_witness=None, root_witness=None):
        self.discrete_witness = discrete_witness
        self.root_witness = root_witness
        super().__init__(message)


class VerificationFailure(YosidaLabError):
    exit_code = 2
