"""Exception types shared across the pipeline."""


class KnowmapError(Exception):
    """Base class for all errors raised by this package."""


# --- ingestion ---------------------------------------------------------


class MalformedRecord(KnowmapError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateId(KnowmapError):
    def __init__(self, entity_id: str):
        super().__init__(f"duplicate entity id {entity_id!r}")
        self.entity_id = entity_id


class MalformedRow(KnowmapError):
    def __init__(self, line_no: int, reason: str):
        super().__init__(f"line {line_no}: {reason}")
        self.line_no = line_no
        self.reason = reason


class DuplicateConceptId(KnowmapError):
    def __init__(self, concept_id: str):
        super().__init__(f"duplicate concept id {concept_id!r}")
        self.concept_id = concept_id


class NonPositiveCount(KnowmapError):
    def __init__(self, line_no: int, count: int):
        super().__init__(f"line {line_no}: count must be >= 1, got {count}")
        self.line_no = line_no
        self.count = count


# --- similarity graph --------------------------------------------------


class EmptyCorpus(KnowmapError):
    pass


# --- topic hierarchy ---------------------------------------------------


class UnknownTopic(KnowmapError):
    def __init__(self, topic_id: str):
        super().__init__(f"unknown topic {topic_id!r}")
        self.topic_id = topic_id


class EmptyMatrix(KnowmapError):
    pass


class InvalidPyramid(KnowmapError):
    pass


# --- occupancy ---------------------------------------------------------


class MissingLevel(KnowmapError):
    def __init__(self, entity_id: str, level: int):
        super().__init__(f"entity {entity_id!r} has no topics at level {level}")
        self.entity_id = entity_id
        self.level = level


# --- layout ------------------------------------------------------------


class EmptyInput(KnowmapError):
    pass


class MalformedFragment(KnowmapError):
    pass


class OutOfRange(KnowmapError):
    pass


# --- bundle store ------------------------------------------------------


class VersionMismatch(KnowmapError):
    def __init__(self, found: int, expected: int):
        super().__init__(f"bundle format version {found}, expected {expected}")
        self.found = found
        self.expected = expected


class CorruptBundle(KnowmapError):
    pass


# --- cli ---------------------------------------------------------------


class ConfigError(KnowmapError):
    pass
