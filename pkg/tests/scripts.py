"""Scripted model answers keyed by template id."""

import json

from patchvet.llmgate import Gateway, ScriptedProvider


def scripted_gateway(**handlers):
    """handlers[template_id] is a JSON-able value, a string, or a callable
    taking the rendered prompt (and optionally n). A tuple answer is a list
    of candidates, one per requested sample."""

    def script(prompt, n):
        h = handlers.get(prompt.template_id)
        if h is None:
            raise AssertionError(f"unexpected template {prompt.template_id}")
        if callable(h):
            try:
                out = h(prompt, n)
            except TypeError:
                out = h(prompt)
        else:
            out = h
        if isinstance(out, tuple):
            return [o if isinstance(o, str) else json.dumps(o) for o in out]
        return out if isinstance(out, str) else json.dumps(out)

    provider = ScriptedProvider(script)
    return Gateway(provider), provider
