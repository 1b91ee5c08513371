"""Random judgment tensors and conversions for the coverage-score tests."""

from hypothesis import strategies as st

from patchvet.gcseval import CriterionJudgment, IssueJudgment, Rationale, RunJudgments


def cell():
    return st.tuples(st.integers(0, 1), st.integers(1, 100))


def tensors(max_issues=5, max_n=10, max_k=5):
    """tensor[n][k][issue][criterion] = (match, confidence), K fixed per tensor."""
    return st.integers(1, max_k).flatmap(
        lambda k: st.lists(
            st.integers(0, max_issues).flatmap(
                lambda x: st.lists(
                    st.lists(st.lists(cell(), min_size=4, max_size=4), min_size=x, max_size=x),
                    min_size=k,
                    max_size=k,
                )
            ),
            min_size=1,
            max_size=max_n,
        )
    )


def rationale(cells, k=1, shuffle=False):
    judgments = [
        IssueJudgment(x, tuple(CriterionJudgment(m, c) for m, c in issue)) for x, issue in enumerate(cells)
    ]
    if shuffle:
        judgments.reverse()
    return Rationale(k, tuple(judgments))


def to_runs(tensor):
    return [
        RunJudgments(len(run[0]), tuple(rationale(cells, k + 1) for k, cells in enumerate(run))) for run in tensor
    ]
