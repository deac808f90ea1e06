"""Exception hierarchy shared across the toolkit.

The CLI maps CodecError to exit code 2 and ProviderError to exit code 3;
everything else is a usage or environment problem.
"""


class StegoError(Exception):
    pass


class CodecError(StegoError):
    pass


class ProviderError(StegoError):
    pass
