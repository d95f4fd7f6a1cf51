"""Python access to the worldcore engine: scenarios, the shared kernel, replay, learning and assessment."""

import json as _json
import os as _os

from ._worldcore import WorldcoreError
from ._worldcore import Kernel as _Kernel
from ._worldcore import assess as _assess
from ._worldcore import learn as _learn
from ._worldcore import replay_log as _replay_log
from ._worldcore import validate as _validate

__all__ = ["Kernel", "WorldcoreError", "assess", "learn", "replay", "validate"]


def validate(path):
    """Load a scenario and return a summary dict; raises WorldcoreError on any problem."""
    return _json.loads(_validate(_os.fspath(path)))


def replay(scenario_path, log_text):
    """Rebuild the final state from JSONL log text and return its stateHash."""
    return _replay_log(_os.fspath(scenario_path), log_text)


def learn(scenario_path, log_text, theta=0.0):
    """Batch-learn the rule store from a log's case features; rules with p >= theta."""
    return _json.loads(_learn(_os.fspath(scenario_path), log_text, float(theta)))


def assess(profile):
    """Applicability report for a world profile given as a dict."""
    return _json.loads(_assess(_json.dumps(profile)))


class Kernel:
    def __init__(self, scenario_path):
        self._k = _Kernel(_os.fspath(scenario_path))

    @property
    def version(self):
        return self._k.version

    def state_hash(self):
        return self._k.state_hash()

    def state(self):
        return _json.loads(self._k.state_json())

    def perceive(self, agent):
        return _json.loads(self._k.perceive(agent))

    def act(self, agent, tool, **args):
        return _json.loads(self._k.act(agent, tool, _json.dumps(args)))

    def rules(self, agent):
        return _json.loads(self._k.rules(agent))

    def manifest(self, role):
        return _json.loads(self._k.manifest(role))

    def run(self, steps, seed):
        return _json.loads(self._k.run(int(steps), int(seed)))

    def log(self):
        return self._k.log_jsonl()
