"""Exception hierarchy shared by every kgscope module."""


class KGScopeError(Exception):
    """Base class for all kgscope errors."""


class FixtureFormatError(KGScopeError):
    def __init__(self, message, lineno=None, path=None):
        self.lineno = lineno
        self.path = path
        where = ""
        if path is not None:
            where += f"{path}"
        if lineno is not None:
            where += f":{lineno}"
        super().__init__(f"{where}: {message}" if where else message)


class ValidationError(KGScopeError):
    pass


class RetrievalError(KGScopeError):
    """A backend call failed; ``retryable`` marks transport-level faults."""

    def __init__(self, message, retryable=True):
        super().__init__(message)
        self.retryable = retryable


class RegistryError(KGScopeError):
    pass


class ArgumentError(KGScopeError):
    pass


class RenderError(KGScopeError):
    pass


class TransportError(KGScopeError):
    """Provider could not be reached. Retried once by the gateway."""


class ScriptMissError(KGScopeError):
    def __init__(self, fingerprint, template_id=None):
        self.fingerprint = fingerprint
        self.template_id = template_id
        super().__init__(f"no scripted response for fingerprint {fingerprint} (template {template_id})")


class TagParseError(KGScopeError):
    pass


class PlanningError(KGScopeError):
    def __init__(self, message, reason="planning"):
        super().__init__(message)
        self.reason = reason
