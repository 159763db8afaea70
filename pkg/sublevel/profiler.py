import io
import os
import threading
import time
from contextlib import nullcontext
from dataclasses import dataclass
from functools import wraps
from pathlib import Path
from typing import Optional, Union

import numpy as np
from rich.console import Console, Group
from rich.panel import Panel
from rich.text import Text
from rich.tree import Tree


def format_seconds(seconds: float) -> str:
    """Formats a duration with a unit picked from its magnitude."""

    if seconds >= 1.0:
        return f"{seconds:.3f}s"
    if seconds >= 1e-3:
        return f"{seconds * 1e3:.3f}ms"
    return f"{seconds * 1e6:.1f}us"


@dataclass(slots=True, frozen=True)
class PhaseStats:
    total: float
    calls: int
    mean: float
    worst: float


class PhaseNode:
    """One named phase of a solver iteration and its nested sub-phases."""

    __slots__ = ["name", "parent", "children", "durations", "_opened"]

    def __init__(self, name: str, parent: Optional["PhaseNode"] = None):
        self.name = name
        self.parent = parent
        self.children: dict[str, "PhaseNode"] = {}
        self.durations: list[float] = []
        self._opened: Optional[float] = None

    @property
    def is_root(self) -> bool:
        return self.parent is None

    def child(self, name: str) -> "PhaseNode":
        node = self.children.get(name)
        if node is None:
            node = PhaseNode(name, parent=self)
            self.children[name] = node
        return node

    def open(self):
        self._opened = time.perf_counter()

    def close(self):
        if self._opened is None:
            raise ValueError(f"phase '{self.name}' closed without being opened.")
        self.durations.append(time.perf_counter() - self._opened)
        self._opened = None

    @property
    def is_open(self) -> bool:
        return self._opened is not None

    def stats(self) -> PhaseStats:
        if not self.durations:
            return PhaseStats(total=0., calls=0, mean=0., worst=0.)
        values = np.asarray(self.durations)
        return PhaseStats(
            total=float(values.sum()),
            calls=int(values.size),
            mean=float(values.mean()),
            worst=float(values.max()),
        )

    def open_phases(self) -> list["PhaseNode"]:
        found = [self] if self.is_open else []
        for node in self.children.values():
            found.extend(node.open_phases())
        return found

    def to_tree(self) -> Tree:
        stats = self.stats()
        label = Text()
        label.append(f"[{self.name}] ", style="green")
        label.append(f"{format_seconds(stats.total)} / {stats.calls}x")
        if self.parent is not None:
            parent_total = self.parent.stats().total
            if parent_total > 0:
                label.append(f" ({round(stats.total / parent_total * 100)}%)")
            else:
                label.append(" (--%)")
        if stats.calls > 1:
            label.append(f"  mean={format_seconds(stats.mean)} worst={format_seconds(stats.worst)}",
                         style="grey50")

        tree = Tree(label, guide_style="bright_blue")
        for node in self.children.values():
            tree.add(node.to_tree())
        return tree


class _PhaseLocal(threading.local):
    def __init__(self):
        self.active: Optional[PhaseNode] = None
        self.roots: dict[str, PhaseNode] = {}

    def reset(self):
        self.active = None
        self.roots.clear()


class _PhaseContext:
    __slots__ = ["name"]

    def __init__(self, name: str):
        self.name = name

    def __enter__(self):
        PhaseTimer._begin(self.name)

    def __exit__(self, *_):
        PhaseTimer._end(self.name)


class PhaseTimer:
    """Thread-local profiler for the phases of optimizer iterations.

    Each thread keeps its own phase tree, so concurrent escape-rate trials
    never mix their timings.
    """

    _local: _PhaseLocal = _PhaseLocal()
    _ENABLED = int(os.getenv("SUBLEVEL_PROFILE", 1))

    @staticmethod
    def _begin(name: str):
        local = PhaseTimer._local
        if local.active is None:
            node = local.roots.get(name)
            if node is None:
                node = PhaseNode(name)
                local.roots[name] = node
        else:
            node = local.active.child(name)
        local.active = node
        node.open()

    @staticmethod
    def _end(name: str):
        local = PhaseTimer._local
        node = local.active
        if node is None:
            raise ValueError(f"phase '{name}' ended without a matching begin.")
        if node.name != name:
            raise ValueError(
                f"Phase mismatch: expected end of '{node.name}', got '{name}'."
            )
        node.close()
        local.active = node.parent

    @staticmethod
    def profile_block(name: str):
        """Times a block of solver code as a nested phase.

        Args:
            name (str): Phase name, e.g. 'spectrum' or 'line_search'.
        """

        if not PhaseTimer._ENABLED:
            return nullcontext()
        return _PhaseContext(name)

    @staticmethod
    def profile_func(name: Optional[str] = None):
        """Decorator form of `profile_block`, named after the function by default."""

        if not PhaseTimer._ENABLED:
            return lambda f: f

        def decorator(func):
            phase = name if name is not None else getattr(func, "__name__", "phase")

            @wraps(func)
            def wrapper(*args, **kwargs):
                PhaseTimer._begin(phase)
                try:
                    return func(*args, **kwargs)
                finally:
                    PhaseTimer._end(phase)
            return wrapper
        return decorator

    @staticmethod
    def reset():
        PhaseTimer._local.reset()

    @staticmethod
    def roots() -> dict[str, PhaseNode]:
        return dict(PhaseTimer._local.roots)

    @staticmethod
    def _render() -> Group:
        items: list = [Panel("sublevel phase profile", style="white", expand=False)]
        open_nodes: list[PhaseNode] = []
        for root in PhaseTimer._local.roots.values():
            items.append(root.to_tree())
            open_nodes.extend(root.open_phases())
        if open_nodes:
            names = ", ".join(f"'{node.name}'" for node in open_nodes)
            items.append(Text(f"WARNING: unfinished phase(s) {names} excluded from totals.",
                              style="yellow"))
        if len(items) == 1:
            items.append(Text("no phases recorded", style="grey50"))
        return Group(*items)

    @staticmethod
    def summarize(console: Optional[Console] = None):
        """Prints the phase tree of the current thread."""

        (console or Console()).print(PhaseTimer._render())

    @staticmethod
    def save_txt(file_path: Union[str, Path]):
        path = Path(file_path)
        sink = io.StringIO()
        Console(file=sink, color_system=None, force_terminal=False, width=120).print(
            PhaseTimer._render())
        path.write_text(sink.getvalue(), encoding="utf-8")
