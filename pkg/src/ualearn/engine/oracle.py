"""Label oracles: the ground-truth simulator and the interface contract.

An oracle may block inside `label` until an external actor answers (the
annotation service does exactly that); `begin_cycle` announces the full
query batch up front so such oracles can publish tasks before the engine
starts waiting on individual ids.
"""

from dataclasses import dataclass

from ..errors import OracleError


class Oracle:
    """Interface: override `label`; batch hooks are optional."""

    def begin_cycle(self, tasks):
        """tasks: sequence of dicts with sample_id / score / method / cycle."""

    def label(self, sample_id):
        raise NotImplementedError

    def end_cycle(self):
        pass


@dataclass
class SimulatedOracle(Oracle):
    """Returns the ground-truth label, immediately and deterministically."""

    dataset: object

    def label(self, sample_id):
        try:
            return self.dataset.label_of(sample_id)
        except KeyError:
            raise OracleError(f"unknown sample id {sample_id!r}") from None


class FailingOracle(Oracle):
    """Fails after a configurable number of answers; used to test rollback."""

    def __init__(self, dataset, fail_after=0):
        self.dataset = dataset
        self.fail_after = fail_after
        self.answered = 0

    def label(self, sample_id):
        if self.answered >= self.fail_after:
            raise OracleError("injected oracle failure")
        self.answered += 1
        return self.dataset.label_of(sample_id)
