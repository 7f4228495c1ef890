"""Pool bookkeeping for the active-learning loop."""

from dataclasses import dataclass, field


@dataclass
class PoolState:
    """Disjoint partition of the pool into labeled / unlabeled / pending ids.

    The union of the three sets is constant across a run; every labeled id
    has exactly one label.
    """

    labeled_ids: list = field(default_factory=list)
    unlabeled_ids: list = field(default_factory=list)
    pending_ids: list = field(default_factory=list)
    labels: dict = field(default_factory=dict)
    cycle_index: int = 0

    def __post_init__(self):
        self.validate()

    def validate(self):
        labeled, unlabeled, pending = (set(self.labeled_ids),
                                       set(self.unlabeled_ids),
                                       set(self.pending_ids))
        if (labeled & unlabeled) or (labeled & pending) or (unlabeled & pending):
            raise ValueError("pool id sets must be pairwise disjoint")
        if len(labeled) != len(self.labeled_ids) or len(unlabeled) != len(self.unlabeled_ids):
            raise ValueError("pool id lists must not contain duplicates")
        missing = labeled - set(self.labels)
        if missing:
            raise ValueError(f"labeled ids without labels: {sorted(missing)[:5]}")

    @property
    def total(self):
        return len(self.labeled_ids) + len(self.unlabeled_ids) + len(self.pending_ids)

    def copy(self):
        return PoolState(list(self.labeled_ids), list(self.unlabeled_ids),
                         list(self.pending_ids), dict(self.labels), self.cycle_index)

    def to_dict(self):
        return {
            "labeled_ids": list(self.labeled_ids),
            "unlabeled_ids": list(self.unlabeled_ids),
            "pending_ids": list(self.pending_ids),
            "labels": {k: int(v) for k, v in self.labels.items()},
            "cycle_index": self.cycle_index,
        }

    @classmethod
    def from_dict(cls, d):
        return cls(list(d["labeled_ids"]), list(d["unlabeled_ids"]),
                   list(d["pending_ids"]), dict(d["labels"]), int(d["cycle_index"]))

    @classmethod
    def initial(cls, pool_dataset, seed_ids, labels):
        """Start with a small labeled seed set; everything else is unlabeled."""
        seed_set = set(seed_ids)
        unlabeled = [sid for sid in pool_dataset.sample_ids if sid not in seed_set]
        return cls(list(seed_ids), unlabeled, [], dict(labels), 0)
