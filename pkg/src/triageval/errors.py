"""Exception types shared across the toolkit."""


class TriagevalError(Exception):
    """Base class for all toolkit errors."""


class MissingColumn(TriagevalError):
    def __init__(self, column: str):
        self.column = column
        super().__init__(f"required column missing: {column!r}")


class BadValue(TriagevalError):
    def __init__(self, row: int, column: str, detail: str = ""):
        self.row = row
        self.column = column
        msg = f"bad value in column {column!r} at row {row}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class DuplicateId(TriagevalError):
    def __init__(self, row: int, record_id: str = ""):
        self.row = row
        self.record_id = record_id
        super().__init__(f"duplicate id {record_id!r} at row {row}")


class OutOfRange(TriagevalError):
    pass


class MissingGrade(TriagevalError):
    pass


class EmptyCohort(TriagevalError):
    pass


class DegenerateLabels(TriagevalError):
    pass


class LengthMismatch(TriagevalError):
    pass


class BadLevel(TriagevalError):
    pass


class ZeroTrials(TriagevalError):
    pass


class NoAnalyzableStrata(TriagevalError):
    pass


class BadSpec(TriagevalError):
    pass


class BadTagSyntax(TriagevalError):
    def __init__(self, row: int, detail: str = ""):
        self.row = row
        msg = f"malformed tag at row {row}"
        super().__init__(f"{msg}: {detail}" if detail else msg)


class UnreadableFile(TriagevalError):
    pass
