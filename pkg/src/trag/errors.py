"""Exception types raised across the package.

Everything derives from TragError so the CLI can map data problems to a
single exit code.
"""


class TragError(Exception):
    """Base class for all package errors."""


class MalformedRecord(TragError):
    def __init__(self, line_no: int, reason: str):
        self.line_no = line_no
        self.reason = reason
        super().__init__(f"malformed record at line {line_no}: {reason}")


class DuplicateId(TragError):
    def __init__(self, table_id: str):
        self.table_id = table_id
        super().__init__(f"duplicate table id {table_id!r}")


class NonRectangular(TragError):
    def __init__(self, table_id: str, row_no: int):
        self.table_id = table_id
        self.row_no = row_no  # 1-based
        super().__init__(f"table {table_id!r}: row {row_no} has wrong cell count")


class BudgetTooSmall(TragError):
    def __init__(self, table_id: str, prefix_tokens: int, budget: int):
        self.table_id = table_id
        self.prefix_tokens = prefix_tokens
        self.budget = budget
        super().__init__(
            f"table {table_id!r}: prefix is {prefix_tokens} tokens, "
            f"budget {budget} leaves no room for row content"
        )


class EmptyCorpus(TragError):
    pass


class EmptyQuery(TragError):
    pass


class EmptyPool(TragError):
    def __init__(self, qid: str):
        self.qid = qid
        super().__init__(f"no non-gold candidate for question {qid!r}")


class DimensionMismatch(TragError):
    def __init__(self, expected: int, got: int):
        self.expected = expected
        self.got = got
        super().__init__(f"expected dimension {expected}, got {got}")


class EmptyIndex(TragError):
    pass


class LengthMismatch(TragError):
    pass


class NoCandidates(TragError):
    pass


class MissingGold(TragError):
    def __init__(self, qid: str):
        self.qid = qid
        super().__init__(f"no gold table for question {qid!r}")


class BadIndexFile(TragError):
    pass
