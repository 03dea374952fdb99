"""Static derivation of seccomp syscall allowlists for programs that use a
shared C library."""

__version__ = "0.1.0"
