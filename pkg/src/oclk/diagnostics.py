"""Positions, diagnostics and the exception types that carry them."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Iterable


@dataclass(frozen=True, order=True)
class Pos:
    line: int = 1
    col: int = 1

    def __str__(self) -> str:
        return f"{self.line}:{self.col}"


NOPOS = Pos(0, 0)


@dataclass(frozen=True)
class Diagnostic:
    message: str
    pos: Pos = NOPOS
    severity: str = "error"
    file: str = "<input>"

    def __str__(self) -> str:
        where = self.file if self.pos == NOPOS else f"{self.file}:{self.pos.line}:{self.pos.col}"
        return f"{where}: {self.severity}: {self.message}"

    def in_file(self, file: str) -> "Diagnostic":
        return Diagnostic(self.message, self.pos, self.severity, file)

    @property
    def is_error(self) -> bool:
        return self.severity == "error"


class OclError(Exception):
    """Base class for errors that carry a list of diagnostics."""

    def __init__(self, diagnostics: Iterable[Diagnostic] | Diagnostic | str):
        if isinstance(diagnostics, str):
            diagnostics = [Diagnostic(diagnostics)]
        elif isinstance(diagnostics, Diagnostic):
            diagnostics = [diagnostics]
        self.diagnostics: list[Diagnostic] = list(diagnostics)
        super().__init__("\n".join(str(d) for d in self.diagnostics))

    def in_file(self, file: str) -> "OclError":
        err = type(self).__new__(type(self))
        OclError.__init__(err, [d.in_file(file) for d in self.diagnostics])
        return err


class LoadError(OclError):
    """A model, snapshot, invocation or trace document failed to load."""


class ParseError(OclError):
    """Tokenizer or parser failure."""


class TypeCheckError(OclError):
    """Static type errors in a constraint."""


class EvaluationError(Exception):
    """Internal evaluation failure. Partiality is never reported this way."""


class IntegerOverflow(EvaluationError):
    pass


@dataclass
class DiagnosticSink:
    """Accumulates diagnostics while a pass keeps going."""

    file: str = "<input>"
    items: list[Diagnostic] = field(default_factory=list)

    def error(self, message: str, pos: Pos = NOPOS) -> None:
        self.items.append(Diagnostic(message, pos, "error", self.file))

    def warning(self, message: str, pos: Pos = NOPOS) -> None:
        self.items.append(Diagnostic(message, pos, "warning", self.file))

    @property
    def has_errors(self) -> bool:
        return any(d.is_error for d in self.items)

    def raise_if_errors(self, exc_type: type[OclError]) -> None:
        if self.has_errors:
            raise exc_type(self.items)
