"""Gate-level sequential netlists: a BLIF subset parser, cycle-accurate
simulation, k-feasible cut enumeration, and cone truth-table extraction.

Supported BLIF directives: .model, .inputs, .outputs, .names (single
output cover), .latch (D flip-flop), .end.
"""

from __future__ import annotations

from dataclasses import dataclass, field

from .truthtable import TruthTable


class NetlistError(Exception):
    pass


@dataclass
class Gate:
    output: str
    inputs: list[str]
    table: TruthTable  # over inputs, x_1 = inputs[0]

    @property
    def fanin(self) -> int:
        return len(self.inputs)

    def eval(self, values: dict[str, int]) -> int:
        m = 0
        for i, net in enumerate(self.inputs):
            m |= values[net] << i
        return self.table.value(m)

    def kind(self) -> str:
        """Coarse primitive class for the cost model."""
        n = self.fanin
        bits = self.table.bits
        size = 1 << n
        full = (1 << size) - 1
        if n == 1:
            return "inv" if bits == 0b01 else "buf"
        if bits == 1 << (size - 1):
            return "and"
        if bits == full ^ (1 << (size - 1)):
            return "nand"
        if bits == full ^ 1:
            return "or"
        if bits == 1:
            return "nor"
        parity = sum((bits >> m) & 1 for m in range(size))
        if all(((bits >> m) & 1) == (bin(m).count("1") & 1) for m in range(size)):
            return "xor"
        if all(((bits >> m) & 1) == 1 - (bin(m).count("1") & 1) for m in range(size)):
            return "xnor"
        return "generic"


@dataclass
class Latch:
    d: str
    q: str
    clock: str | None = None
    init: int = 0


@dataclass
class Netlist:
    model: str = ""
    inputs: list[str] = field(default_factory=list)
    outputs: list[str] = field(default_factory=list)
    gates: dict[str, Gate] = field(default_factory=dict)  # keyed by output net
    latches: dict[str, Latch] = field(default_factory=dict)  # keyed by q net

    def drivers(self) -> set[str]:
        return set(self.inputs) | set(self.gates) | set(self.latches)

    def validate(self) -> None:
        driven = list(self.inputs) + list(self.gates) + list(self.latches)
        seen = set()
        for net in driven:
            if net in seen:
                raise NetlistError(f"net {net!r} driven more than once")
            seen.add(net)
        for g in self.gates.values():
            for net in g.inputs:
                if net not in seen:
                    raise NetlistError(f"net {net!r} has no driver")
        for l in self.latches.values():
            if l.d not in seen:
                raise NetlistError(f"latch data net {l.d!r} has no driver")
        for net in self.outputs:
            if net not in seen:
                raise NetlistError(f"output net {net!r} has no driver")
        self.topo_order()  # raises on combinational loops

    def topo_order(self) -> list[str]:
        """Gate outputs in topological order; latch outputs and PIs are
        sources."""
        order: list[str] = []
        state: dict[str, int] = {}  # 0 visiting, 1 done

        sources = set(self.inputs) | set(self.latches)
        stack: list[tuple[str, bool]] = []
        for root in sorted(self.gates):
            if root in state and state[root]:
                continue
            stack.append((root, False))
            while stack:
                net, expanded = stack.pop()
                if net in sources or (state.get(net) == 1):
                    continue
                if expanded:
                    state[net] = 1
                    order.append(net)
                    continue
                if state.get(net) == 0:
                    raise NetlistError(f"combinational loop through {net!r}")
                state[net] = 0
                stack.append((net, True))
                for dep in self.gates[net].inputs:
                    if dep in self.gates and state.get(dep) != 1:
                        stack.append((dep, False))
        return order

    def fanouts(self) -> dict[str, list[str]]:
        """net -> consumer labels (gate output nets, 'latch:<q>', 'po')."""
        out: dict[str, list[str]] = {}
        for g in self.gates.values():
            for net in g.inputs:
                out.setdefault(net, []).append(g.output)
        for l in self.latches.values():
            out.setdefault(l.d, []).append(f"latch:{l.q}")
        for net in self.outputs:
            out.setdefault(net, []).append("po")
        return out

    def eval_comb(self, pi_values: dict[str, int],
                  state: dict[str, int]) -> dict[str, int]:
        values = dict(pi_values)
        for q, l in self.latches.items():
            values[q] = state.get(q, l.init)
        for net in self.topo_order():
            values[net] = self.gates[net].eval(values)
        return values

    def step(self, pi_values: dict[str, int],
             state: dict[str, int]) -> tuple[dict[str, int], dict[str, int]]:
        """One clock cycle: returns (net values, next latch state)."""
        values = self.eval_comb(pi_values, state)
        return values, {q: values[l.d] for q, l in self.latches.items()}


def _cover_to_table(inputs: list[str], cover: list[tuple[str, str]]) -> TruthTable:
    n = len(inputs)
    if n == 0:
        raise NetlistError(".names without inputs is unsupported")
    if n > 8:
        raise NetlistError(f".names with {n} inputs exceeds the supported width")
    out_vals = {v for _, v in cover}
    if not out_vals <= {"0", "1"}:
        raise NetlistError(f"unsupported cover outputs {out_vals}")
    # BLIF covers are either all-1 (on-set given) or all-0 (off-set given).
    if "0" in out_vals and "1" in out_vals:
        raise NetlistError("mixed on-set/off-set cover")
    onset_given = "0" not in out_vals
    bits = 0
    for m in range(1 << n):
        hit = False
        for pattern, _ in cover:
            if len(pattern) != n:
                raise NetlistError(f"cover row {pattern!r} width mismatch")
            ok = True
            for i, c in enumerate(pattern):
                b = (m >> i) & 1
                if c == "-":
                    continue
                if c not in "01":
                    raise NetlistError(f"bad cover character {c!r}")
                if b != int(c):
                    ok = False
                    break
            if ok:
                hit = True
                break
        value = hit if onset_given else not hit
        if value:
            bits |= 1 << m
    return TruthTable(n, bits)


def parse_blif(text: str) -> Netlist:
    nl = Netlist()
    lines: list[str] = []
    for raw in text.splitlines():
        line = raw.split("#", 1)[0].rstrip()
        if not line.strip():
            continue
        if lines and lines[-1].endswith("\\"):
            lines[-1] = lines[-1][:-1] + " " + line.strip()
        else:
            lines.append(line.strip())

    i = 0
    while i < len(lines):
        line = lines[i]
        tokens = line.split()
        directive = tokens[0]
        if directive == ".model":
            nl.model = tokens[1] if len(tokens) > 1 else ""
        elif directive == ".inputs":
            nl.inputs.extend(tokens[1:])
        elif directive == ".outputs":
            nl.outputs.extend(tokens[1:])
        elif directive == ".latch":
            if len(tokens) < 3:
                raise NetlistError(f"malformed .latch: {line!r}")
            d, q = tokens[1], tokens[2]
            clock = None
            init = 0
            rest = tokens[3:]
            if len(rest) >= 2 and rest[0] in ("fe", "re", "ah", "al", "as"):
                clock = rest[1]
                rest = rest[2:]
            if rest:
                if rest[0] not in ("0", "1", "2", "3"):
                    raise NetlistError(f"bad latch init {rest[0]!r}")
                init = 1 if rest[0] == "1" else 0
            if q in nl.latches:
                raise NetlistError(f"latch output {q!r} driven more than once")
            nl.latches[q] = Latch(d, q, clock, init)
        elif directive == ".names":
            if len(tokens) < 2:
                raise NetlistError(f"malformed .names: {line!r}")
            *ins, out = tokens[1:]
            cover = []
            while i + 1 < len(lines) and not lines[i + 1].startswith("."):
                i += 1
                row = lines[i].split()
                if len(row) == 1 and not ins:
                    cover.append(("", row[0]))
                elif len(row) == 2:
                    cover.append((row[0], row[1]))
                else:
                    raise NetlistError(f"malformed cover row {lines[i]!r}")
            if not ins:
                raise NetlistError(
                    f"constant .names for {out!r} unsupported in this subset"
                )
            if out in nl.gates:
                raise NetlistError(f"net {out!r} driven more than once")
            nl.gates[out] = Gate(out, list(ins), _cover_to_table(ins, cover))
        elif directive == ".end":
            break
        else:
            raise NetlistError(f"unsupported directive {directive!r}")
        i += 1

    nl.validate()
    return nl


def write_blif(nl: Netlist, extra_lines: list[str] | None = None) -> str:
    out = [f".model {nl.model or 'mapped'}"]
    out.append(".inputs " + " ".join(nl.inputs))
    out.append(".outputs " + " ".join(nl.outputs))
    for q in sorted(nl.latches):
        l = nl.latches[q]
        clk = f" re {l.clock}" if l.clock else ""
        out.append(f".latch {l.d} {l.q}{clk} {l.init}")
    for name in sorted(nl.gates):
        g = nl.gates[name]
        out.append(".names " + " ".join(g.inputs) + f" {g.output}")
        for m in range(g.table.size):
            if g.table.value(m):
                pattern = "".join(str((m >> i) & 1) for i in range(g.fanin))
                out.append(f"{pattern} 1")
    for line in extra_lines or []:
        out.append(line)
    out.append(".end")
    return "\n".join(out) + "\n"


@dataclass(frozen=True)
class Cut:
    root: str
    leaves: tuple[str, ...]  # sorted
    gates: frozenset[str]  # cone gate output nets

    @property
    def trivial(self) -> bool:
        return not self.gates


def _cone_gates(nl: Netlist, root: str, leaves: frozenset[str]) -> frozenset[str]:
    gates = set()
    stack = [root]
    while stack:
        net = stack.pop()
        if net in leaves or net not in nl.gates:
            continue
        if net in gates:
            continue
        gates.add(net)
        stack.extend(nl.gates[net].inputs)
    return frozenset(gates)


def enumerate_cuts(nl: Netlist, root: str, k: int = 5) -> list[Cut]:
    """All k-feasible cuts of root via bottom-up enumeration with
    dominated-cut pruning; includes the trivial cut {root}."""
    if k > 6:
        raise ValueError("cut width limited to k <= 6")
    memo: dict[str, list[frozenset[str]]] = {}

    def cuts_of(net: str) -> list[frozenset[str]]:
        if net in memo:
            return memo[net]
        result = [frozenset([net])]
        if net in nl.gates:
            fanin_cuts = [cuts_of(x) for x in nl.gates[net].inputs]
            merged: set[frozenset[str]] = set()
            stack = [(0, frozenset())]
            while stack:
                idx, acc = stack.pop()
                if len(acc) > k:
                    continue
                if idx == len(fanin_cuts):
                    merged.add(acc)
                    continue
                for c in fanin_cuts[idx]:
                    u = acc | c
                    if len(u) <= k:
                        stack.append((idx + 1, u))
            result.extend(merged)
        # prune dominated cuts (a superset of another cut is never better)
        pruned = []
        for c in sorted(set(result), key=lambda s: (len(s), sorted(s))):
            if not any(p < c or p == c for p in pruned):
                pruned.append(c)
        memo[net] = pruned
        return pruned

    out = []
    for leaves in cuts_of(root):
        out.append(Cut(root, tuple(sorted(leaves)), _cone_gates(nl, root, leaves)))
    out.sort(key=lambda c: (len(c.leaves), c.leaves))
    return out


def cut_function(nl: Netlist, cut: Cut) -> TruthTable:
    """Truth table of the root in terms of the (sorted) leaves, by
    exhaustive cone simulation; x_1 = first leaf."""
    leaves = cut.leaves
    if len(leaves) > 6:
        raise ValueError("cone simulation limited to 6 leaves")
    if cut.trivial:
        return TruthTable(1, 0b10)
    order = [n for n in nl.topo_order() if n in cut.gates]
    bits = 0
    for m in range(1 << len(leaves)):
        values = {leaf: (m >> i) & 1 for i, leaf in enumerate(leaves)}
        for net in order:
            values[net] = nl.gates[net].eval(values)
        bits |= values[cut.root] << m
    return TruthTable(len(leaves), bits)
