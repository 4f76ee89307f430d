"""Exception hierarchy shared by all solver modules."""


class HSIEError(Exception):
    """Base class; the CLI maps any subclass to exit status 1."""

    code = "hsie_error"

    def to_dict(self):
        return {"error": self.code, "type": type(self).__name__, "message": str(self)}


class SingularResolvent(HSIEError):
    code = "singular_resolvent"


class SingularSystem(HSIEError):
    code = "singular_system"


class SingularMatrix(SingularSystem):
    code = "singular_matrix"


class ResidualTooLarge(HSIEError):
    code = "residual_too_large"


class ConvergenceFailure(HSIEError):
    code = "convergence_failure"


class ShiftIsEigenvalue(SingularMatrix):
    code = "shift_is_eigenvalue"


class ParseError(HSIEError):
    code = "parse_error"

    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        loc = ""
        if line is not None:
            loc = f"line {line}" + (f", column {column}" if column is not None else "") + ": "
        super().__init__(loc + message)

    def to_dict(self):
        d = super().to_dict()
        d.update(line=self.line, column=self.column)
        return d


class NonConvexBoundary(HSIEError):
    code = "non_convex_boundary"


class OpenBoundaryLoop(HSIEError):
    code = "open_boundary_loop"


class DegenerateEdge(HSIEError):
    code = "degenerate_edge"


class DegenerateTrapezoid(HSIEError):
    code = "degenerate_trapezoid"


class DegenerateCorner(HSIEError):
    code = "degenerate_corner"


class RayCrossing(HSIEError):
    code = "ray_crossing"


class MissingMaterial(HSIEError):
    code = "missing_material"


class InconsistentRays(HSIEError):
    code = "inconsistent_rays"


class MissingTraceData(HSIEError):
    code = "missing_trace_data"


class NoGuidedMode(HSIEError):
    code = "no_guided_mode"


class BranchOutOfRange(HSIEError):
    code = "branch_out_of_range"
