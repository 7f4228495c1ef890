"""Annotation sessions: a running experiment paused at labeling barriers.

Each session owns one engine thread. The HumanOracle blocks that thread
inside `label` until an HTTP handler delivers the answer; all mutations go
through the session lock, so the engine never observes interleaved writes.
"""

import threading
import uuid
from dataclasses import dataclass, field

from ..engine import prepare_seed_run, run_seed
from ..engine.checkpoint import checkpoint_bytes
from ..engine.oracle import Oracle
from ..errors import OracleError

PHASES = ("starting", "scoring", "awaiting_labels", "retraining", "done", "failed")


@dataclass
class AnnotationTask:
    task_id: str
    sample_id: str
    uncertainty: float
    method: str
    cycle_index: int
    class_names: list
    status: str = "open"      # open | labeled
    label: int = None


class SessionAborted(OracleError):
    pass


class HumanOracle(Oracle):
    def __init__(self, session):
        self.session = session

    def begin_cycle(self, tasks):
        self.session._publish_tasks(tasks)

    def label(self, sample_id):
        return self.session._wait_for_label(sample_id)

    def end_cycle(self):
        pass


@dataclass
class Session:
    session_id: str
    config: object
    class_names: list = field(default_factory=list)
    phase: str = "starting"
    cycle_index: int = 0
    tasks: dict = field(default_factory=dict)          # task_id -> AnnotationTask
    reports: list = field(default_factory=list)
    error: str = ""

    def __post_init__(self):
        self._lock = threading.Lock()
        self._cond = threading.Condition(self._lock)
        self._by_sample = {}
        self._aborted = False
        self._runs = {}
        self._checkpoint_blob = None
        self._thread = None

    # -- engine side ----------------------------------------------------

    def start(self, initial_state=None, initial_model=None):
        self._thread = threading.Thread(target=self._drive,
                                        args=(initial_state, initial_model),
                                        daemon=True)
        self._thread.start()

    def _drive(self, initial_state, initial_model):
        try:
            for seed in self.config.seeds:
                run = prepare_seed_run(self.config, seed)
                if initial_state is not None:
                    run.state = initial_state
                    run.model = initial_model
                    initial_state = initial_model = None
                with self._lock:
                    self._runs[seed] = run
                    if not self.class_names:
                        self.class_names = [f"class {c}"
                                            for c in range(run.pool_ds.class_count)]
                run_seed(run, HumanOracle(self), observer=self,
                         checkpoint_cb=self._snapshot)
            with self._cond:
                self.phase = "done"
                self._cond.notify_all()
        except SessionAborted:
            pass
        except Exception as exc:  # surfaced through /status
            with self._cond:
                self.phase = "failed"
                self.error = f"{type(exc).__name__}: {exc}"
                self._cond.notify_all()

    def on_phase(self, phase, cycle_index):
        if phase == "done":
            return  # the driver decides when everything is done
        with self._cond:
            self.phase = phase
            self.cycle_index = cycle_index
            self._cond.notify_all()

    def on_report(self, report):
        with self._cond:
            self.reports.append(report)
            self._cond.notify_all()

    def _snapshot(self, run):
        blob = checkpoint_bytes(run.state, run.model,
                                meta={"seed": run.seed,
                                      "session_id": self.session_id})
        with self._lock:
            self._checkpoint_blob = blob

    def _publish_tasks(self, tasks):
        with self._cond:
            self.tasks = {}
            self._by_sample = {}
            for spec in tasks:
                task = AnnotationTask(
                    task_id=uuid.uuid4().hex[:12],
                    sample_id=spec["sample_id"],
                    uncertainty=float(spec["score"]),
                    method=spec["method"],
                    cycle_index=int(spec["cycle_index"]),
                    class_names=list(self.class_names),
                )
                self.tasks[task.task_id] = task
                self._by_sample[task.sample_id] = task
            self._cond.notify_all()

    def _wait_for_label(self, sample_id):
        with self._cond:
            task = self._by_sample.get(sample_id)
            if task is None:
                raise OracleError(f"no task published for sample {sample_id!r}")
            while task.status != "labeled":
                if self._aborted:
                    raise SessionAborted("session shut down")
                self._cond.wait(timeout=0.5)
            return task.label

    # -- HTTP side ------------------------------------------------------

    def open_tasks(self, limit):
        with self._lock:
            open_list = [t for t in self.tasks.values() if t.status == "open"]
        open_list.sort(key=lambda t: (-t.uncertainty, t.sample_id))
        return open_list[: max(0, limit)]

    def get_task(self, task_id):
        with self._lock:
            return self.tasks.get(task_id)

    def submit_label(self, task_id, class_index):
        """Returns the task; raises KeyError / ValueError by contract."""
        with self._cond:
            task = self.tasks.get(task_id)
            if task is None:
                raise KeyError(task_id)
            if task.status == "labeled":
                raise FileExistsError(task_id)  # mapped to 409 by the app
            if not isinstance(class_index, int) or not 0 <= class_index < len(
                    self.class_names):
                raise ValueError(f"class {class_index!r} out of range")
            task.label = int(class_index)
            task.status = "labeled"
            self._cond.notify_all()
            return task

    def sample_features(self, sample_id):
        with self._lock:
            for run in self._runs.values():
                if sample_id in run.pool_ds.sample_ids:
                    feats, _ = run.pool_ds.rows_for([sample_id])
                    return feats[0]
        raise KeyError(sample_id)

    def status(self):
        with self._lock:
            open_count = sum(1 for t in self.tasks.values() if t.status == "open")
            labeled_count = sum(1 for t in self.tasks.values() if t.status == "labeled")
            latest = self.reports[-1].to_json_dict() if self.reports else None
            return {
                "session_id": self.session_id,
                "phase": self.phase,
                "cycle_index": self.cycle_index,
                "open_count": open_count,
                "labeled_count": labeled_count,
                "class_names": list(self.class_names),
                "latest_report": latest,
                "reports": [r.to_json_dict() for r in self.reports],
                "error": self.error,
            }

    def checkpoint_blob(self):
        with self._lock:
            return self._checkpoint_blob

    def shutdown(self):
        with self._cond:
            self._aborted = True
            self._cond.notify_all()
        if self._thread is not None:
            self._thread.join(timeout=5)

    def wait_done(self, timeout=60):
        with self._cond:
            self._cond.wait_for(lambda: self.phase in ("done", "failed"),
                                timeout=timeout)
            return self.phase
