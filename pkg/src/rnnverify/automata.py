"""Deterministic finite automata over small alphabets, plus the Tomita grammars.

The seven Tomita grammars are the classic binary-alphabet benchmark for
grammatical inference.  Each is given here as a hand-minimized DFA; the test
suite checks every table against an independent predicate on all strings up
to length 12.

Labels are integers throughout: 1 for strings in the language ("positive"),
0 for strings outside it ("negative").
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

POSITIVE = 1
NEGATIVE = 0

BINARY_ALPHABET = ("0", "1")

TOMITA_IDS = (1, 2, 3, 4, 5, 6, 7)

TOMITA_DESCRIPTIONS = {
    1: "1*",
    2: "(10)*",
    3: "no odd run of 1s immediately followed by an odd run of 0s",
    4: "no substring 000",
    5: "even number of 0s and even number of 1s",
    6: "difference between counts of 0s and 1s is a multiple of 3",
    7: "0*1*0*1*",
}


@dataclass(frozen=True)
class Dfa:
    """A complete DFA: every state has exactly one successor per symbol.

    transitions[s][i] is the successor of state s on alphabet[i].
    """

    num_states: int
    alphabet: tuple[str, ...]
    transitions: tuple[tuple[int, ...], ...]
    start: int
    accepting: frozenset[int]

    def __post_init__(self):
        if self.num_states < 1:
            raise ValueError("a DFA needs at least one state")
        if not self.alphabet:
            raise ValueError("empty alphabet")
        if len(set(self.alphabet)) != len(self.alphabet):
            raise ValueError("duplicate symbols in alphabet")
        if any(len(sym) != 1 for sym in self.alphabet):
            raise ValueError("alphabet symbols must be single characters")
        if len(self.transitions) != self.num_states:
            raise ValueError(
                f"transition table has {len(self.transitions)} rows "
                f"for {self.num_states} states"
            )
        for s, row in enumerate(self.transitions):
            if len(row) != len(self.alphabet):
                raise ValueError(f"state {s}: expected one successor per symbol")
            for t in row:
                if not 0 <= t < self.num_states:
                    raise ValueError(f"state {s}: successor {t} out of range")
        if not 0 <= self.start < self.num_states:
            raise ValueError(f"start state {self.start} out of range")
        for a in self.accepting:
            if not 0 <= a < self.num_states:
                raise ValueError(f"accepting state {a} out of range")

    def symbol_index(self, symbol: str) -> int:
        try:
            return self.alphabet.index(symbol)
        except ValueError:
            raise ValueError(f"symbol {symbol!r} not in alphabet {self.alphabet}") from None

    def step(self, state: int, symbol: str) -> int:
        return self.transitions[state][self.symbol_index(symbol)]

    def run(self, string: str) -> int:
        """Final state after consuming the whole string from the start state."""
        state = self.start
        table = self.transitions
        index = {sym: i for i, sym in enumerate(self.alphabet)}
        for ch in string:
            try:
                state = table[state][index[ch]]
            except KeyError:
                raise ValueError(
                    f"symbol {ch!r} not in alphabet {self.alphabet}"
                ) from None
        return state

    def accepts(self, string: str) -> bool:
        return self.run(string) in self.accepting

    def classify(self, string: str) -> int:
        return POSITIVE if self.accepts(string) else NEGATIVE


# Transition tables for the seven grammars, binary alphabet ("0", "1").
# Row s is (successor on 0, successor on 1).  All seven are minimal.
_TOMITA_TABLES = {
    1: (2, ((1, 0), (1, 1)), 0, (0,)),
    2: (3, ((2, 1), (0, 2), (2, 2)), 0, (0,)),
    3: (5, ((0, 1), (2, 0), (3, 4), (2, 1), (4, 4)), 0, (0, 1, 3)),
    4: (4, ((1, 0), (2, 0), (3, 0), (3, 3)), 0, (0, 1, 2)),
    5: (4, ((1, 2), (0, 3), (3, 0), (2, 1)), 0, (0,)),
    6: (3, ((1, 2), (2, 0), (0, 1)), 0, (0,)),
    7: (5, ((0, 1), (2, 1), (2, 3), (4, 3), (4, 4)), 0, (0, 1, 2, 3)),
}


def tomita_dfa(grammar_id: int) -> Dfa:
    """Minimal DFA for Tomita grammar 1..7."""
    if grammar_id not in _TOMITA_TABLES:
        raise ValueError(f"unknown grammar id {grammar_id}; expected 1..7")
    n, table, start, acc = _TOMITA_TABLES[grammar_id]
    return Dfa(
        num_states=n,
        alphabet=BINARY_ALPHABET,
        transitions=table,
        start=start,
        accepting=frozenset(acc),
    )


def _reachable_states(dfa: Dfa) -> list[int]:
    """States reachable from the start, in BFS order (alphabet order ties)."""
    seen = [dfa.start]
    seen_set = {dfa.start}
    i = 0
    while i < len(seen):
        s = seen[i]
        i += 1
        for t in dfa.transitions[s]:
            if t not in seen_set:
                seen_set.add(t)
                seen.append(t)
    return seen


def minimize(dfa: Dfa) -> Dfa:
    """Minimal equivalent DFA via partition refinement.

    Unreachable states are dropped first.  The result is canonically
    numbered in BFS order from the start state, so minimizing twice gives
    the identical automaton.
    """
    reach = _reachable_states(dfa)
    # refine the partition {accepting, rejecting} by successor blocks
    block = {s: (1 if s in dfa.accepting else 0) for s in reach}
    while True:
        sig = {
            s: (block[s],) + tuple(block[dfa.transitions[s][i]] for i in range(len(dfa.alphabet)))
            for s in reach
        }
        renumber: dict[tuple, int] = {}
        new_block = {}
        for s in reach:
            if sig[s] not in renumber:
                renumber[sig[s]] = len(renumber)
            new_block[s] = renumber[sig[s]]
        if new_block == block:
            break
        block = new_block

    # canonical numbering: BFS over blocks from the start block
    rep: dict[int, int] = {}
    for s in reach:
        rep.setdefault(block[s], s)
    order = [block[dfa.start]]
    seen = {block[dfa.start]}
    i = 0
    while i < len(order):
        b = order[i]
        i += 1
        s = rep[b]
        for sym_i in range(len(dfa.alphabet)):
            nb = block[dfa.transitions[s][sym_i]]
            if nb not in seen:
                seen.add(nb)
                order.append(nb)
    new_id = {b: i for i, b in enumerate(order)}

    transitions = tuple(
        tuple(new_id[block[dfa.transitions[rep[b]][sym_i]]] for sym_i in range(len(dfa.alphabet)))
        for b in order
    )
    accepting = frozenset(new_id[b] for b in order if rep[b] in dfa.accepting)
    return Dfa(
        num_states=len(order),
        alphabet=dfa.alphabet,
        transitions=transitions,
        start=0,
        accepting=accepting,
    )


def equivalent(a: Dfa, b: Dfa) -> tuple[bool, str | None]:
    """Language equality check via the product construction.

    Returns (True, None) when the automata accept the same language, else
    (False, w) where w is a shortest distinguishing string (ties broken
    lexicographically in alphabet order).
    """
    if a.alphabet != b.alphabet:
        raise ValueError(f"alphabets differ: {a.alphabet} vs {b.alphabet}")
    start = (a.start, b.start)
    seen = {start}
    queue: list[tuple[tuple[int, int], str]] = [(start, "")]
    i = 0
    while i < len(queue):
        (sa, sb), prefix = queue[i]
        i += 1
        if (sa in a.accepting) != (sb in b.accepting):
            return False, prefix
        for sym_i, sym in enumerate(a.alphabet):
            nxt = (a.transitions[sa][sym_i], b.transitions[sb][sym_i])
            if nxt not in seen:
                seen.add(nxt)
                queue.append((nxt, prefix + sym))
    return True, None


# ---------------------------------------------------------------------------
# language counting, enumeration and uniform sampling at a fixed length


def _suffix_counts(dfa: Dfa, length: int, label: int) -> list[list[int]]:
    """counts[k][s] = number of length-(length-k) suffixes from state s that
    land in an accepting state (label=1) or rejecting state (label=0).

    Exact integer arithmetic; counts grow like |alphabet|**length.
    """
    want_accept = label == POSITIVE
    counts = [[0] * dfa.num_states for _ in range(length + 1)]
    for s in range(dfa.num_states):
        if (s in dfa.accepting) == want_accept:
            counts[length][s] = 1
    for k in range(length - 1, -1, -1):
        row = counts[k]
        nxt = counts[k + 1]
        for s in range(dfa.num_states):
            row[s] = sum(nxt[t] for t in dfa.transitions[s])
    return counts


def count_strings(dfa: Dfa, length: int, label: int) -> int:
    """How many strings of exactly this length the DFA labels as given."""
    if length < 0:
        raise ValueError("length must be non-negative")
    if label not in (POSITIVE, NEGATIVE):
        raise ValueError(f"label must be {POSITIVE} or {NEGATIVE}")
    return _suffix_counts(dfa, length, label)[0][dfa.start]


def enumerate_strings(dfa: Dfa, length: int, label: int, limit: int | None = None):
    """Yield the labeled strings of the given length in lexicographic order.

    Prunes prefixes with no completions, so the cost is proportional to the
    number of strings produced, not to |alphabet|**length.
    """
    counts = _suffix_counts(dfa, length, label)
    if counts[0][dfa.start] == 0:
        return
    produced = 0
    stack = [(dfa.start, "")]
    while stack:
        state, prefix = stack.pop()
        k = len(prefix)
        if k == length:
            yield prefix
            produced += 1
            if limit is not None and produced >= limit:
                return
            continue
        for sym_i in range(len(dfa.alphabet) - 1, -1, -1):
            nxt = dfa.transitions[state][sym_i]
            if counts[k + 1][nxt] > 0:
                stack.append((nxt, prefix + dfa.alphabet[sym_i]))


def _randbelow(rng: np.random.Generator, total: int) -> int:
    """Exact uniform integer in [0, total); works for arbitrarily large total."""
    if total <= 0:
        raise ValueError("total must be positive")
    bits = total.bit_length()
    nbytes = (bits + 7) // 8
    mask = (1 << bits) - 1
    while True:
        r = int.from_bytes(rng.bytes(nbytes), "big") & mask
        if r < total:
            return r


def sample_strings(
    dfa: Dfa, length: int, label: int, count: int, rng: np.random.Generator
) -> list[str]:
    """Sample strings of the given length and label uniformly, with replacement.

    Walks the DFA choosing each symbol with probability proportional to the
    number of labeled completions.  Exact integer weights, so the draw is
    uniform over the whole class even when it has ~2**200 members.

    Raises ValueError when the class is empty at this length.
    """
    counts = _suffix_counts(dfa, length, label)
    total = counts[0][dfa.start]
    if total == 0:
        raise ValueError(
            f"no strings of length {length} with label {label} in this language"
        )
    out = []
    for _ in range(count):
        state = dfa.start
        chars = []
        for k in range(length):
            weights = [counts[k + 1][t] for t in dfa.transitions[state]]
            r = _randbelow(rng, sum(weights))
            acc = 0
            for sym_i, w in enumerate(weights):
                acc += w
                if r < acc:
                    break
            chars.append(dfa.alphabet[sym_i])
            state = dfa.transitions[state][sym_i]
        out.append("".join(chars))
    return out


# ---------------------------------------------------------------------------
# labeled datasets


@dataclass(frozen=True)
class LabeledDataset:
    """Labeled strings with a train/test split.

    samples are (string, label) pairs; strings are unique.  The split index
    tuples are disjoint and together cover all samples.
    """

    samples: tuple[tuple[str, int], ...]
    train_indices: tuple[int, ...]
    test_indices: tuple[int, ...]
    grammar_id: int | str = "external"

    def __post_init__(self):
        strings = [w for w, _ in self.samples]
        if len(set(strings)) != len(strings):
            raise ValueError("duplicate strings in dataset")
        for w, y in self.samples:
            if y not in (POSITIVE, NEGATIVE):
                raise ValueError(f"bad label {y!r} for string {w!r}")
        n = len(self.samples)
        all_idx = sorted(self.train_indices) + sorted(self.test_indices)
        if any(not 0 <= i < n for i in all_idx):
            raise ValueError("split index out of range")
        if len(set(self.train_indices) | set(self.test_indices)) != len(all_idx):
            raise ValueError("train and test splits overlap")
        if len(all_idx) != n:
            raise ValueError("split does not cover every sample")

    def __len__(self) -> int:
        return len(self.samples)

    def split(self, name: str) -> list[tuple[str, int]]:
        if name == "train":
            return [self.samples[i] for i in self.train_indices]
        if name == "test":
            return [self.samples[i] for i in self.test_indices]
        raise ValueError(f"unknown split {name!r}")

    def train_samples(self) -> list[tuple[str, int]]:
        return self.split("train")

    def test_samples(self) -> list[tuple[str, int]]:
        return self.split("test")

    def class_counts(self, split: str | None = None) -> dict[int, int]:
        pairs = self.samples if split is None else self.split(split)
        counts = {NEGATIVE: 0, POSITIVE: 0}
        for _, y in pairs:
            counts[y] += 1
        return counts


def generate_dataset(
    grammar_id: int,
    min_length: int,
    max_length: int,
    max_per_class: int,
    seed: int,
) -> LabeledDataset:
    """Sample a balanced dataset from a Tomita grammar, all in the train split.

    Strings are drawn per length, round-robin across lengths, until each
    class reaches max_per_class or every length is exhausted.  Within one
    length the choice is uniform without replacement.  Labels come from the
    grammar's DFA.  Use split_dataset for a train/test split.
    """
    if min_length < 0 or max_length < min_length:
        raise ValueError(f"bad length range [{min_length}, {max_length}]")
    if max_per_class < 1:
        raise ValueError("max_per_class must be positive")
    dfa = tomita_dfa(grammar_id)
    rng = np.random.default_rng(seed)

    # per (length, label) pools, each shuffled uniformly
    pools: dict[int, dict[int, list[str]]] = {}
    for length in range(min_length, max_length + 1):
        pools[length] = {}
        for label in (POSITIVE, NEGATIVE):
            total = count_strings(dfa, length, label)
            if total == 0:
                pools[length][label] = []
            elif total <= 4 * max_per_class or total <= 1 << 16:
                pool = list(enumerate_strings(dfa, length, label))
                rng.shuffle(pool)
                pools[length][label] = pool
            else:
                # class too large to enumerate: draw with replacement and
                # dedup; collisions are vanishingly rare at these sizes
                want = min(max_per_class, total)
                seen: dict[str, None] = {}
                attempts = 0
                while len(seen) < want and attempts < 50 * want:
                    for w in sample_strings(dfa, length, label, want, rng):
                        seen.setdefault(w, None)
                    attempts += want
                pools[length][label] = list(seen)

    samples: list[tuple[str, int]] = []
    for label in (POSITIVE, NEGATIVE):
        taken = 0
        cursors = {length: 0 for length in pools}
        while taken < max_per_class:
            progress = False
            for length in sorted(pools):
                pool = pools[length][label]
                cur = cursors[length]
                if cur < len(pool) and taken < max_per_class:
                    samples.append((pool[cur], label))
                    cursors[length] = cur + 1
                    taken += 1
                    progress = True
            if not progress:
                break

    if not samples:
        raise ValueError(
            f"grammar {grammar_id} has no strings in lengths "
            f"[{min_length}, {max_length}]"
        )
    order = rng.permutation(len(samples))
    shuffled = tuple(samples[i] for i in order)
    return LabeledDataset(
        samples=shuffled,
        train_indices=tuple(range(len(shuffled))),
        test_indices=(),
        grammar_id=grammar_id,
    )


def split_dataset(
    dataset: LabeledDataset, train_fraction: float, seed: int
) -> LabeledDataset:
    """Stratified train/test split preserving the class ratio within 1 sample."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError("train_fraction must be strictly between 0 and 1")
    rng = np.random.default_rng(seed)
    by_label: dict[int, list[int]] = {}
    for i, (_, y) in enumerate(dataset.samples):
        by_label.setdefault(y, []).append(i)

    train: list[int] = []
    test: list[int] = []
    for label in sorted(by_label):
        idx = by_label[label]
        order = rng.permutation(len(idx))
        n_train = round(train_fraction * len(idx))
        for pos, j in enumerate(order):
            (train if pos < n_train else test).append(idx[j])
    if not train or not test:
        raise ValueError(
            f"split {train_fraction} leaves a side empty "
            f"({len(train)} train, {len(test)} test)"
        )
    return LabeledDataset(
        samples=dataset.samples,
        train_indices=tuple(sorted(train)),
        test_indices=tuple(sorted(test)),
        grammar_id=dataset.grammar_id,
    )


# ---------------------------------------------------------------------------
# serialization

_LABEL_WORDS = {POSITIVE: "positive", NEGATIVE: "negative"}
_WORD_LABELS = {w: l for l, w in _LABEL_WORDS.items()}


def dataset_to_csv(dataset: LabeledDataset, path) -> None:
    import io

    from ._util import write_text_atomic

    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["string", "label", "split"])
    split_of = {}
    for i in dataset.train_indices:
        split_of[i] = "train"
    for i in dataset.test_indices:
        split_of[i] = "test"
    for i, (w, y) in enumerate(dataset.samples):
        writer.writerow([w, _LABEL_WORDS[y], split_of[i]])
    write_text_atomic(path, buf.getvalue())


def dataset_from_csv(path, grammar_id: int | str = "external") -> LabeledDataset:
    samples: list[tuple[str, int]] = []
    train: list[int] = []
    test: list[int] = []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        header = next(reader, None)
        if header != ["string", "label", "split"]:
            raise ValueError(f"{path}: expected header string,label,split, got {header}")
        for lineno, row in enumerate(reader, start=2):
            if not row:
                continue
            if len(row) != 3:
                raise ValueError(f"{path}:{lineno}: expected 3 columns, got {len(row)}")
            w, word, split = row
            if word not in _WORD_LABELS:
                raise ValueError(f"{path}:{lineno}: bad label {word!r}")
            if split not in ("train", "test"):
                raise ValueError(f"{path}:{lineno}: bad split {split!r}")
            idx = len(samples)
            samples.append((w, _WORD_LABELS[word]))
            (train if split == "train" else test).append(idx)
    return LabeledDataset(
        samples=tuple(samples),
        train_indices=tuple(train),
        test_indices=tuple(test),
        grammar_id=grammar_id,
    )


def dfa_to_text(dfa: Dfa) -> str:
    """Plain-text DFA form:

        states 5 start 0
        accepting 0 1 3
        state 0: 0->0 1->1
        ...
    """
    lines = [f"states {dfa.num_states} start {dfa.start}"]
    lines.append("accepting " + " ".join(str(s) for s in sorted(dfa.accepting)))
    for s in range(dfa.num_states):
        arrows = " ".join(
            f"{sym}->{dfa.transitions[s][i]}" for i, sym in enumerate(dfa.alphabet)
        )
        lines.append(f"state {s}: {arrows}")
    return "\n".join(lines) + "\n"


def dfa_from_text(text: str) -> Dfa:
    lines = [ln.strip() for ln in text.splitlines() if ln.strip()]
    if not lines:
        raise ValueError("empty DFA text")
    head = lines[0].split()
    if len(head) != 4 or head[0] != "states" or head[2] != "start":
        raise ValueError(f"bad header line: {lines[0]!r}")
    try:
        num_states = int(head[1])
        start = int(head[3])
    except ValueError:
        raise ValueError(f"bad header line: {lines[0]!r}") from None
    if len(lines) < 2 or not lines[1].startswith("accepting"):
        raise ValueError("missing accepting line")
    accepting = frozenset(int(tok) for tok in lines[1].split()[1:])

    state_lines = lines[2:]
    if len(state_lines) != num_states:
        raise ValueError(f"expected {num_states} state lines, got {len(state_lines)}")
    alphabet: list[str] = []
    rows: dict[int, dict[str, int]] = {}
    for ln in state_lines:
        head_part, _, arrows_part = ln.partition(":")
        toks = head_part.split()
        if len(toks) != 2 or toks[0] != "state":
            raise ValueError(f"bad state line: {ln!r}")
        s = int(toks[1])
        if s in rows:
            raise ValueError(f"duplicate state line for state {s}")
        rows[s] = {}
        for arrow in arrows_part.split():
            sym, sep, dest = arrow.partition("->")
            if sep != "->":
                raise ValueError(f"bad transition {arrow!r} in {ln!r}")
            if sym not in alphabet:
                alphabet.append(sym)
            if sym in rows[s]:
                raise ValueError(f"state {s}: duplicate transition on {sym!r}")
            rows[s][sym] = int(dest)

    transitions = []
    for s in range(num_states):
        if s not in rows:
            raise ValueError(f"missing state line for state {s}")
        row = rows[s]
        if set(row) != set(alphabet):
            raise ValueError(f"state {s}: transitions do not cover the alphabet")
        transitions.append(tuple(row[sym] for sym in alphabet))
    return Dfa(
        num_states=num_states,
        alphabet=tuple(alphabet),
        transitions=tuple(transitions),
        start=start,
        accepting=accepting,
    )


def save_dfa(dfa: Dfa, path) -> None:
    from ._util import write_text_atomic

    write_text_atomic(path, dfa_to_text(dfa))


def load_dfa(path) -> Dfa:
    with open(path) as fh:
        return dfa_from_text(fh.read())
