"""Bundled example graphs and the survey loading matrix."""

from importlib import resources

from ..graph import FactorGraph

GRAPH_NAMES = (
    "intro_overlap",
    "zuta_ordered",
    "zuta_blocked",
    "ar_identifiable",
    "full_staircase_6_3",
    "full_staircase_7_3",
    "full_staircase_5_2",
    "sparse_subgraph_5_2",
    "wide_four_factor",
    "matching_demo",
    "two_block_overlap",
    "staircase_with_tail",
    "algebraic_gap_a",
    "algebraic_gap_b",
    "harman5",
    "full_staircase_8_4",
)


def fixture_text(filename: str) -> str:
    return resources.files(__package__).joinpath(filename).read_text()


def load_graph(name: str) -> FactorGraph:
    """Load a bundled graph fixture by name."""
    if name not in GRAPH_NAMES:
        raise KeyError(f"unknown fixture {name!r}; choices: {GRAPH_NAMES}")
    return FactorGraph.from_json(fixture_text(f"{name}.json"))


def survey_loadings_csv() -> str:
    """The thresholding case-study loading matrix (15 variables, 5 factors).

    Magnitudes below 0.1 were not reported in the source table; they appear
    here as 0.09 placeholders so that sweeps below 0.10 see a denser graph.
    """
    return fixture_text("survey_loadings.csv")
