"""Exception hierarchy shared by all eigenmatch modules."""


class EigenmatchError(Exception):
    """Base class for all errors raised by this package."""


class InputError(EigenmatchError):
    """Problems with user-supplied data (CLI exit code 2)."""


class NumericalError(EigenmatchError):
    """Numerical failures (CLI exit code 3)."""


class ParseError(InputError):
    """Malformed mesh file.

    ``line`` is the 1-based line number of the offending content, when known.
    """

    def __init__(self, message, line=None, path=None):
        self.line = line
        self.path = path
        where = []
        if path is not None:
            where.append(str(path))
        if line is not None:
            where.append(f"line {line}")
        prefix = ":".join(where)
        super().__init__(f"{prefix}: {message}" if prefix else message)


class DegenerateMeshError(InputError):
    """Mesh geometry or topology the discretization cannot handle.

    ``face`` holds the 0-based face index (or ``edge`` the vertex pair)
    where the problem was detected.
    """

    def __init__(self, message, face=None, edge=None):
        self.face = face
        self.edge = edge
        self.line = None
        if face is not None:
            message = f"face {face}: {message}"
        elif edge is not None:
            message = f"edge {tuple(edge)}: {message}"
        super().__init__(message)


class DisconnectedMeshError(InputError):
    pass


class MeshMismatchError(InputError):
    pass


class DimensionMismatchError(InputError):
    pass


class SolverError(NumericalError):
    pass


class DegenerateStatisticsError(NumericalError):
    pass


class EmptyCandidateError(NumericalError):
    pass
