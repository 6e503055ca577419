"""Scripted policies used across protocol tests."""

from rep import Sensitivity


class ScriptedPolicy:
    """Decides a constant, emits a fixed numeric partial, remembers its inputs."""

    def __init__(self, agent_id, partials=None, order=1.0):
        self.agent_id = agent_id
        self.partials = partials or {}
        self.order = order
        self.seen_states = []
        self.seen_inboxes = []

    def act(self, state, observation, inbox):
        self.seen_states.append(state)
        self.seen_inboxes.append(dict(inbox))
        return {"order": self.order}, Sensitivity.of_numeric(self.partials)
