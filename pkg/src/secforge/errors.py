"""Exception hierarchy shared by the analysis stages."""


class SecforgeError(Exception):
    """Base class for every error raised by this package."""


class IrSyntaxError(SecforgeError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class DuplicateFunction(SecforgeError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"duplicate function {name!r}")


class DanglingLabel(SecforgeError):
    def __init__(self, function, label):
        self.function = function
        self.label = label
        super().__init__(f"{function}: jump to undefined block {label!r}")


class CyclicAlias(SecforgeError):
    def __init__(self, names):
        self.names = tuple(names)
        super().__init__("alias cycle: " + " -> ".join(self.names))


class UnknownCallee(SecforgeError):
    def __init__(self, name, caller=None):
        self.name = name
        self.caller = caller
        where = f" (called from {caller})" if caller else ""
        super().__init__(f"unknown callee {name!r}{where}")


class UnknownApi(SecforgeError):
    def __init__(self, name):
        self.name = name
        super().__init__(f"API {name!r} is not a function of the library")


class PointerArgument(SecforgeError):
    def __init__(self, site, index):
        self.site = site
        self.index = index
        super().__init__(f"argument {index} of {site} is pointer-typed")


class DisassemblySyntaxError(SecforgeError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"line {line}: {reason}")


class UnknownArch(SecforgeError):
    def __init__(self, arch):
        self.arch = arch
        super().__init__(f"unsupported architecture {arch!r}")


class ArchMismatch(SecforgeError):
    pass


class DuplicateNumber(SecforgeError):
    pass


class DuplicateName(SecforgeError):
    pass


class SchemaError(SecforgeError):
    pass


class TraceParseError(SecforgeError):
    def __init__(self, line, reason):
        self.line = line
        self.reason = reason
        super().__init__(f"trace line {line}: {reason}")


class ConfigError(SecforgeError):
    pass


class UnknownSyscallInCveMap(SecforgeError):
    def __init__(self, cve_id, name):
        self.cve_id = cve_id
        self.name = name
        super().__init__(f"{cve_id}: syscall {name!r} is not in the table")
