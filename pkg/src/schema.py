import pandera.pandas as pa
from pandera.typing import Series

GEO_PATTERN = r"^([A-Z]{2}|GLOBAL)$"


class NodeMetadataSchema(pa.DataFrameModel):
    """
    Validates the node metadata CSV.
    host_patterns and languages are ';'-separated lists.
    """
    id: Series[str] = pa.Field(unique=True, str_length={"min_value": 1})
    host_patterns: Series[str] = pa.Field(nullable=True)
    languages: Series[str] = pa.Field(nullable=True)
    geography: Series[str] = pa.Field(str_matches=GEO_PATTERN)

    class Config:
        strict = 'filter'
        coerce = True


class VisitationLogSchema(pa.DataFrameModel):
    """
    Validates the panel visitation log: one row per visit event.
    """
    user_id: Series[str] = pa.Field(str_length={"min_value": 1})
    site_id: Series[str] = pa.Field(str_length={"min_value": 1})

    class Config:
        strict = 'filter'
        coerce = True


class DirectedEdgeListSchema(pa.DataFrameModel):
    """
    Validates directed hyperlink edge lists (crawler output or external).
    """
    src: Series[str] = pa.Field(str_length={"min_value": 1})
    dst: Series[str] = pa.Field(str_length={"min_value": 1})
    count: Series[int] = pa.Field(ge=0, coerce=True)

    class Config:
        strict = 'filter'


class WeightedEdgeListSchema(pa.DataFrameModel):
    """
    Undirected ties, one row per tie, src < dst by id.
    """
    src: Series[str]
    dst: Series[str]
    weight: Series[float] = pa.Field(gt=0, coerce=True)

    @pa.dataframe_check
    def ordered_pairs(cls, df) -> Series[bool]:
        return df["src"] < df["dst"]

    class Config:
        strict = 'filter'


class DuplicationPairsSchema(pa.DataFrameModel):
    """
    Upper-triangle audience duplication pairs.
    """
    src: Series[str]
    dst: Series[str]
    duplication: Series[float] = pa.Field(ge=0, le=1)
    expected: Series[float] = pa.Field(ge=0, le=1)
    excess: Series[float]

    class Config:
        strict = 'filter'


class DegreeCcdfSchema(pa.DataFrameModel):
    """
    Degree distribution table behind the log-log degree plots.
    """
    degree: Series[int] = pa.Field(ge=0, coerce=True)
    count: Series[int] = pa.Field(ge=1, coerce=True)
    fraction: Series[float] = pa.Field(ge=0, le=1)
    ccdf: Series[float] = pa.Field(ge=0, le=1)

    class Config:
        strict = 'filter'


class StatsTableSchema(pa.DataFrameModel):
    """
    Side-by-side descriptive statistics of both networks.
    """
    statistic: Series[str] = pa.Field(unique=True)
    hyperlink: Series[float] = pa.Field(nullable=True, coerce=True)
    audience: Series[float] = pa.Field(nullable=True, coerce=True)

    class Config:
        strict = 'filter'

