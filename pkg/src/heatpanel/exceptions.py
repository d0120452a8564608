"""Exception hierarchy shared by all pipeline stages."""


class HeatPanelError(Exception):
    """Base class for every error raised by :mod:`heatpanel`."""


# panel data ---------------------------------------------------------------

class MissingColumn(HeatPanelError, KeyError):
    def __init__(self, columns, source=""):
        self.columns = list(columns)
        where = f" in {source}" if source else ""
        super().__init__(f"missing mandatory column(s){where}: {', '.join(self.columns)}")

    def __str__(self):
        return self.args[0]


class DuplicateKey(HeatPanelError, ValueError):
    def __init__(self, key, rows):
        self.key = key
        self.rows = list(rows)
        super().__init__(f"duplicate panel key {key} on rows {', '.join(map(str, self.rows))}")


class ParseError(HeatPanelError, ValueError):
    """Unparseable field. ``problems`` holds every ``(row, column, raw)`` found."""

    def __init__(self, row, column, problems=None):
        self.row = row
        self.column = column
        self.problems = list(problems) if problems else [(row, column, None)]
        lines = [f"row {r}, column {c!r}: cannot parse {v!r}" for r, c, v in self.problems[:20]]
        extra = len(self.problems) - 20
        if extra > 0:
            lines.append(f"... and {extra} more")
        super().__init__("\n".join(lines))


# heat indicators ----------------------------------------------------------

class UnknownMunicipality(HeatPanelError, KeyError):
    def __str__(self):
        return f"unknown municipality {self.args[0]!r}"


class MissingCell(HeatPanelError, KeyError):
    def __init__(self, cell_id):
        self.cell_id = cell_id
        super().__init__(cell_id)

    def __str__(self):
        return f"cell {self.cell_id!r} missing from temperature grid"


class InvalidExtrema(HeatPanelError, ValueError):
    pass


class WrongWeekLength(HeatPanelError, ValueError):
    pass


# aggregation --------------------------------------------------------------

class ZeroTotalPopulation(HeatPanelError, ValueError):
    pass


class UnmappedMunicipality(HeatPanelError, KeyError):
    def __str__(self):
        return f"UnmappedMunicipality: {self.args[0]}"


# greenness ----------------------------------------------------------------

class EmptyResidentialArea(HeatPanelError, ValueError):
    pass


class UnknownClassCode(HeatPanelError, ValueError):
    pass


class EmptyPanel(HeatPanelError, ValueError):
    """A stage received a panel without rows."""


class DegenerateVariance(HeatPanelError, ValueError):
    pass


# regression ---------------------------------------------------------------

class UnknownColumn(HeatPanelError, KeyError):
    def __str__(self):
        return f"unknown column {self.args[0]!r}"


class RankWouldBeZero(HeatPanelError, ValueError):
    pass


class NoConvergence(HeatPanelError, RuntimeError):
    pass


class PerfectCollinearityAll(HeatPanelError, ValueError):
    pass


class TooFewClusters(HeatPanelError, ValueError):
    pass


class NonAlignedDesign(HeatPanelError, ValueError):
    pass


class MissingInteractionTerm(HeatPanelError, KeyError):
    def __str__(self):
        return str(self.args[0])


# forecasting --------------------------------------------------------------

class EmptyBaseline(HeatPanelError, ValueError):
    pass


class DistrictMismatch(HeatPanelError, ValueError):
    pass


class InvalidParameter(HeatPanelError, ValueError):
    pass
