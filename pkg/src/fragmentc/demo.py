"""Demonstration workflows, actions, and printers for the MSC corpus.

The tool config names these components opaquely (``demo.msc.*``); this module
provides their implementations. The semantics are demonstration-grade:
``symtab`` collects instance names, ``check`` verifies event peers, the trace
action follows message flow, and the compose action merges charts vertically.
"""
from __future__ import annotations

from pathlib import Path

from .engine import SyntaxNode, parse
from .reports import ProblemReport, error, warning
from .services import (
    ActionRegistry,
    ActionResult,
    DefaultPrinter,
    EditorActionRequest,
    NavigatorActionRequest,
    PrinterRegistry,
    WorkflowPass,
    WorkflowRegistry,
    format_document,
)

TRACE_ACTION_ID = "demo.msc.GenerateTraceAction"
COMPOSE_ACTION_ID = "demo.msc.ComposeAction"


def _local(production: str) -> str:
    return production.rsplit(".", 1)[-1]


def _instances(root: SyntaxNode) -> list[SyntaxNode]:
    return [c for c in root.children if _local(c.production) == "Instance"]


def _methods(root: SyntaxNode) -> list[SyntaxNode]:
    return [c for c in root.children if _local(c.production) != "Instance"]


# --------------------------------------------------------------------------
# workflows


def _symtab(root: SyntaxNode, file: str, workspace) -> list[ProblemReport]:
    seen: set[str] = set()
    reports: list[ProblemReport] = []
    for inst in _instances(root):
        name = inst.attr("name", "")
        if name in seen:
            reports.append(warning(f"duplicate instance {name!r}", file,
                                   inst.span.start_line, inst.span.start_col, source="symtab"))
        seen.add(name)
    return reports


def _check(root: SyntaxNode, file: str, workspace) -> list[ProblemReport]:
    declared = {inst.attr("name") for inst in _instances(root)}
    reports: list[ProblemReport] = []
    for inst in _instances(root):
        for event in inst.children:
            kind = _local(event.production)
            peer = None
            if kind == "SendEvent":
                peer = event.attr("receiver")
            elif kind == "ReceiveEvent":
                peer = event.attr("sender")
            if peer is not None and peer not in declared:
                reports.append(error(f"unknown instance {peer}", file,
                                     event.span.start_line, event.span.start_col, source="check"))
    return reports


def demo_workflow_registry() -> WorkflowRegistry:
    registry = WorkflowRegistry()
    registry.register(WorkflowPass("symtab", _symtab))
    registry.register(WorkflowPass("check", _check))
    return registry


# --------------------------------------------------------------------------
# trace editor action


def trace_steps(root: SyntaxNode) -> tuple[list[str], list[str]]:
    """Follow message flow: each send jumps to its matching receive.

    Returns (steps, leftovers); leftovers name events that never fired.
    """
    order = [inst.attr("name") for inst in _instances(root)]
    queues = {inst.attr("name"): list(inst.children) for inst in _instances(root)}

    def skip_inert(name: str) -> None:
        q = queues[name]
        while q and _local(q[0].production) not in ("SendEvent", "ReceiveEvent"):
            q.pop(0)

    steps: list[str] = []
    while True:
        for name in order:
            skip_inert(name)
        sender = next(
            (n for n in order if queues[n] and _local(queues[n][0].production) == "SendEvent"),
            None,
        )
        if sender is None:
            break
        send = queues[sender].pop(0)
        message, target = send.attr("message"), send.attr("receiver")
        steps.append(f"{sender}.out {message}")
        for idx, event in enumerate(queues.get(target, [])):
            if (_local(event.production) == "ReceiveEvent"
                    and event.attr("message") == message and event.attr("sender") == sender):
                queues[target].pop(idx)
                steps.append(f"{target}.in {message}")
                break
    leftovers = [
        f"{name}.{_local(ev.production)} {ev.attr('message', ev.attr('name', ''))}"
        for name in order
        for ev in queues[name]
        if _local(ev.production) in ("SendEvent", "ReceiveEvent")
    ]
    return steps, leftovers


def _generate_trace(req: EditorActionRequest) -> ActionResult:
    outcome = parse(req.text, req.lang, req.path, handle=req.handle)
    if outcome.root is None:
        return ActionResult(reports=outcome.problems)
    steps, leftovers = trace_steps(outcome.root)
    reports = tuple(
        warning(f"event never fires: {item}", req.path, source="trace") for item in leftovers
    )
    name = Path(req.path).stem or "msc"
    return ActionResult(
        new_files={f"{name}.trace.txt": "\n".join(steps) + "\n"},
        reports=reports,
    )


# --------------------------------------------------------------------------
# compose navigator action


def _node_slice(text: str, node: SyntaxNode) -> str:
    leaves = node.leaf_tokens()
    if not leaves:
        return ""
    return text[leaves[0].offset:leaves[-1].end_offset]


def _compose(req: NavigatorActionRequest) -> ActionResult:
    paths = list(req.files_to_projects)
    if len(paths) < 2:
        return ActionResult(reports=(error("compose requires ≥ 2 files", paths[0] if paths else "<compose>",
                                           source="action"),))
    docs: list[tuple[str, str, SyntaxNode]] = []
    for path in paths:
        text = req.read_file(path)
        outcome = parse(text, req.lang, path, handle=req.handle)
        if outcome.root is None:
            reports = tuple(outcome.problems) + (
                error(f"cannot compose: {path} does not parse", path, source="action"),
            )
            return ActionResult(reports=reports)
        docs.append((path, text, outcome.root))

    merged_name = "_".join(root.attr("name", "msc") for _, _, root in docs)
    instance_order: list[str] = []
    events_by_instance: dict[str, list[str]] = {}
    methods: list[str] = []
    for _, text, root in docs:
        for inst in _instances(root):
            name = inst.attr("name")
            if name not in events_by_instance:
                instance_order.append(name)
                events_by_instance[name] = []
            events_by_instance[name].extend(_node_slice(text, ev) for ev in inst.children)
        methods.extend(_node_slice(text, m) for m in _methods(root))

    raw: list[str] = [f"msc {merged_name} {{"]
    for name in instance_order:
        raw.append(f"instance {name} {{")
        raw.extend(events_by_instance[name])
        raw.append("}")
    raw.extend(methods)
    raw.append("}")
    merged_outcome = parse("\n".join(raw), req.lang, "<composed>", handle=req.handle)
    if merged_outcome.root is None:
        return ActionResult(reports=tuple(merged_outcome.problems) + (
            error("composed document does not parse", "<composed>", source="action"),))
    content = format_document(merged_outcome, req.lang)
    extension = Path(paths[0]).suffix or ".msc"
    return ActionResult(new_files={f"{merged_name}{extension}": content})


def demo_action_registry() -> ActionRegistry:
    registry = ActionRegistry()
    registry.register_editor(TRACE_ACTION_ID, _generate_trace)
    registry.register_navigator(COMPOSE_ACTION_ID, _compose)
    return registry


def demo_printer_registry() -> PrinterRegistry:
    registry = PrinterRegistry()
    registry.register("msc.MSCPrettyPrinter", "MSC", DefaultPrinter())
    registry.register("java.JavaDSLPrettyPrinter", "JavaDSL", DefaultPrinter())
    return registry
