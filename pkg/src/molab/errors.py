"""Error taxonomy. Numeric/model failures exit 1 from the CLI, usage/config
failures exit 2."""


class MolabError(Exception):
    """Base class for numeric and model errors."""


class ConfigError(MolabError):
    """Bad configuration, unknown names, malformed files. CLI exit code 2."""


class EmptyRegionError(MolabError):
    pass


class SingularNodeError(MolabError):
    pass


class WeightFloorError(MolabError):
    pass


class NormOverflowError(MolabError):
    pass


class UnderdeterminedError(MolabError):
    pass


class IllConditionedError(MolabError):
    pass


class DegenerateProfileError(MolabError):
    pass


class ConvergenceError(MolabError):
    pass


class EpsilonTooSmallError(MolabError):
    pass


class BandTooNarrowError(MolabError):
    pass


class NotA1Error(MolabError):
    """Carleson comparison requested for a growth function the grid cannot
    certify as Muckenhoupt A_1."""
