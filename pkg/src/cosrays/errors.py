"""Exception hierarchy shared by all modules."""


class CosRaysError(Exception):
    """Base class; ``code`` is the machine-readable name used by the CLI."""

    code = "error"

    def to_dict(self):
        return {"error": self.code, "message": str(self)}


class ZeroParameter(CosRaysError, ValueError):
    code = "ZeroParameter"


class NegativeInput(CosRaysError, ValueError):
    code = "NegativeInput"


class MapOverflow(CosRaysError, OverflowError):
    """e^{|Re z|} is not representable; ``sign`` is the sign of Re z."""

    code = "Overflow"

    def __init__(self, sign, msg=None):
        self.sign = 1 if sign >= 0 else -1
        super().__init__(msg or f"exponential overflow (Re z sign {self.sign:+d})")


class TowerUnderflow(CosRaysError, ArithmeticError):
    code = "Underflow"


class SymbolOverflow(CosRaysError, OverflowError):
    code = "SymbolOverflow"


class OnPartitionBoundary(CosRaysError):
    code = "OnPartitionBoundary"


class NotInvertibleHere(CosRaysError):
    code = "NotInvertibleHere"


class BelowTailThreshold(CosRaysError, ValueError):
    code = "BelowTailThreshold"


class BranchFailure(CosRaysError):
    code = "BranchFailure"


class SingularValueOnRay(CosRaysError):
    code = "SingularValueOnRay"

    def __init__(self, msg, ray=None):
        super().__init__(msg)
        self.ray = ray


class ContinuityBreak(CosRaysError):
    code = "ContinuityBreak"

    def __init__(self, msg, ray=None):
        super().__init__(msg)
        self.ray = ray


class NonCauchy(CosRaysError):
    code = "NonCauchy"


class DegenerateFit(CosRaysError, ValueError):
    code = "DegenerateFit"
