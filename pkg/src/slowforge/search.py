"""Four-phase search loop evolving a seed query into slow, valid variants.

Each iteration performs one selection, at most one expansion, one simulation
(reading the pre-dispatched execution outcome from the result cache), and one
backpropagation, so the root's visit count equals the number of iterations.
The seed's own execution happens once up front (iteration zero) and defines
the latency baseline T0 and the reference result hash H0 that every candidate
is validated against, including descendants of timed-out nodes.
"""

from __future__ import annotations

import json
import math
import random
from dataclasses import dataclass, field

from .degrade import StrategyHistory, TransformError, applicable_strategies
from .executor import (
    DispatchQueueFull,
    Dispatcher,
    ExecutionOutcome,
    ExecutorConfig,
    Status,
    validity,
)
from .mutate import (
    FREE_FORM,
    RULE_GUIDED,
    ExtractionError,
    MutationRequest,
    Mutator,
    ProviderUnavailable,
    choose_mode,
)
from .sqltree import SqlTree, parse, render, structural_score


class SeedInvalid(Exception):
    """The seed failed its execution gate (error, timeout, or empty result)."""


class AllTerminal(Exception):
    """Every descendant is terminal; the search for this seed halts."""


@dataclass(frozen=True, slots=True)
class MctsConfig:
    exploration_c: float = 1.0
    lambda_t: float = 0.7
    lambda_s: float = 0.3
    alpha_log: float = 1.0
    rho_invalid: float = -1.0
    gamma_timeout: float | None = None  # defaults to lambda_t
    iterations: int = 100
    fanout: int = 3
    rule_prob: float = 0.5
    rng_seed: int = 0

    def __post_init__(self) -> None:
        if self.exploration_c <= 0:
            raise ValueError("exploration_c must be positive")
        if self.fanout < 1 or self.iterations < 0:
            raise ValueError("fanout must be >= 1 and iterations >= 0")

    @property
    def gamma(self) -> float:
        """Timeout reward: the latency share of the reward, acknowledging high
        latency potential while withholding the structural bonus."""
        return self.lambda_t if self.gamma_timeout is None else self.gamma_timeout

    def to_json(self) -> dict:
        return {
            "exploration_c": self.exploration_c,
            "lambda_t": self.lambda_t,
            "lambda_s": self.lambda_s,
            "alpha_log": self.alpha_log,
            "rho_invalid": self.rho_invalid,
            "gamma_timeout": self.gamma_timeout,
            "iterations": self.iterations,
            "fanout": self.fanout,
            "rule_prob": self.rule_prob,
            "rng_seed": self.rng_seed,
        }

    @classmethod
    def from_json(cls, doc: dict) -> "MctsConfig":
        return cls(**doc)


class SearchNode:
    __slots__ = (
        "id",
        "sql",
        "parent",
        "children",
        "q",
        "n",
        "outcome",
        "phi",
        "history",
        "terminal",
        "no_more_expansion",
        "strategy_id",
        "last_reward",
        "_tree",
    )

    def __init__(
        self,
        node_id: int,
        sql: str,
        parent: "SearchNode | None" = None,
        history: tuple[str, ...] = (),
        strategy_id: str | None = None,
    ):
        self.id = node_id
        self.sql = sql
        self.parent = parent
        self.children: list[SearchNode] = []
        self.q = 0.0
        self.n = 0
        self.outcome: ExecutionOutcome | None = None
        self.phi = 0
        self.history = history
        self.terminal = False
        self.no_more_expansion = False
        self.strategy_id = strategy_id
        self.last_reward: float | None = None
        self._tree: SqlTree | None = None

    @property
    def tree(self) -> SqlTree:
        if self._tree is None:
            self._tree = parse(self.sql)
        return self._tree

    def mean_reward(self) -> float:
        return self.q / self.n if self.n else 0.0

    def depth(self) -> int:
        d, cur = 0, self
        while cur.parent is not None:
            d += 1
            cur = cur.parent
        return d


class SearchTree:
    def __init__(
        self,
        seed_sql: str,
        root: SearchNode,
        t0: float,
        h0: int,
        cfg: MctsConfig,
        schema_id: str = "",
    ):
        self.seed_sql = seed_sql
        self.root = root
        self.t0 = t0
        self.h0 = h0
        self.cfg = cfg
        self.schema_id = schema_id
        self.iterations_done = 0
        self.halted = False  # set when every branch went terminal
        self.nodes: list[SearchNode] = [root]
        self.rng_state: tuple | None = None

    def new_node(self, sql: str, parent: SearchNode, history, strategy_id) -> SearchNode:
        node = SearchNode(len(self.nodes), sql, parent, history, strategy_id)
        self.nodes.append(node)
        parent.children.append(node)
        return node

    # -- persistence -----------------------------------------------------------

    def to_json(self) -> dict:
        return {
            "version": 1,
            "kind": "search_tree",
            "seed_sql": self.seed_sql,
            "schema_id": self.schema_id,
            "t0": self.t0,
            "h0": self.h0,
            "iterations_done": self.iterations_done,
            "halted": self.halted,
            "config": self.cfg.to_json(),
            "rng_state": _rng_state_to_json(self.rng_state),
            "nodes": [
                {
                    "id": n.id,
                    "parent_id": n.parent.id if n.parent else None,
                    "sql": n.sql,
                    "q": n.q,
                    "n": n.n,
                    "phi": n.phi,
                    "terminal": n.terminal,
                    "no_more_expansion": n.no_more_expansion,
                    "strategy_id": n.strategy_id,
                    "history": list(n.history),
                    "last_reward": n.last_reward,
                    "outcome": n.outcome.to_json() if n.outcome else None,
                }
                for n in self.nodes
            ],
        }

    @classmethod
    def from_json(cls, doc: dict) -> "SearchTree":
        if doc.get("version") != 1 or doc.get("kind") != "search_tree":
            raise ValueError("not a version-1 search tree document")
        cfg = MctsConfig.from_json(doc["config"])
        nodes_by_id: dict[int, SearchNode] = {}
        root: SearchNode | None = None
        tree: SearchTree | None = None
        for nd in doc["nodes"]:
            parent = nodes_by_id.get(nd["parent_id"]) if nd["parent_id"] is not None else None
            node = SearchNode(
                nd["id"], nd["sql"], parent, tuple(nd["history"]), nd["strategy_id"]
            )
            node.q = nd["q"]
            node.n = nd["n"]
            node.phi = nd["phi"]
            node.terminal = nd["terminal"]
            node.no_more_expansion = nd["no_more_expansion"]
            node.last_reward = nd["last_reward"]
            if nd["outcome"] is not None:
                node.outcome = ExecutionOutcome.from_json(nd["outcome"])
            nodes_by_id[node.id] = node
            if parent is None:
                root = node
                tree = cls(doc["seed_sql"], root, doc["t0"], doc["h0"], cfg, doc["schema_id"])
            else:
                parent.children.append(node)
                assert tree is not None
                tree.nodes.append(node)
        assert tree is not None
        tree.iterations_done = doc["iterations_done"]
        tree.halted = doc.get("halted", False)
        tree.rng_state = _rng_state_from_json(doc["rng_state"])
        return tree


def _rng_state_to_json(state: tuple | None):
    if state is None:
        return None
    return [state[0], list(state[1]), state[2]]


def _rng_state_from_json(doc) -> tuple | None:
    if doc is None:
        return None
    return (doc[0], tuple(doc[1]), doc[2])


# -- the four phases ----------------------------------------------------------------


def uct_score(child: SearchNode, parent_visits: int, c: float) -> float:
    return child.mean_reward() + c * math.sqrt(2.0 * math.log(parent_visits) / child.n)


def uct_select(root: SearchNode, c: float, fanout: int) -> SearchNode:
    """Descend by UCT among non-terminal children until hitting a leaf or a
    node with unexpanded capacity. Unvisited children are taken first, ties
    broken by lowest child index."""
    node = root
    while True:
        if node.terminal:
            raise AllTerminal("root subtree exhausted")
        if not node.children:
            return node
        if len(node.children) < fanout and not node.no_more_expansion:
            return node
        live = [ch for ch in node.children if not ch.terminal]
        if not live:
            node.terminal = True
            node = root
            continue
        unvisited = [ch for ch in live if ch.n == 0]
        if unvisited:
            node = unvisited[0]
            continue
        best = live[0]
        best_score = uct_score(best, node.n, c)
        for ch in live[1:]:
            score = uct_score(ch, node.n, c)
            if score > best_score:
                best, best_score = ch, score
        node = best


def simulate_reward(node: SearchNode, seed_tree: SqlTree, t0: float, cfg: MctsConfig) -> float:
    """Piecewise reward: invalid nodes earn the static penalty, timeouts earn
    the saturation reward, and verified slowdowns combine the tanh-compressed
    log latency ratio with the structural divergence bonus."""
    assert node.outcome is not None
    if node.outcome.status is Status.TIMEOUT:
        return cfg.gamma
    if node.phi == 0:
        return cfg.rho_invalid
    ratio = node.outcome.latency_seconds / t0
    latency_part = cfg.lambda_t * math.tanh(cfg.alpha_log * math.log(ratio))
    parent = node.parent if node.parent is not None else node
    structure_part = cfg.lambda_s * structural_score(node.tree, parent.tree, seed_tree)
    return latency_part + structure_part


def backpropagate(node: SearchNode, reward: float) -> None:
    cur: SearchNode | None = node
    while cur is not None:
        cur.n += 1
        cur.q += reward
        cur = cur.parent


def expand(
    leaf: SearchNode,
    tree: SearchTree,
    mutator: Mutator,
    dispatcher: Dispatcher,
    schema_ddl: str,
    cfg: MctsConfig,
    rng: random.Random,
) -> list[SearchNode]:
    """Create up to fanout children via the mutation boundary and dispatch
    each child's execution immediately. Provider failures skip the attempt."""
    created: list[SearchNode] = []
    sibling_sql = {c.sql for c in leaf.children}
    chosen: set[str] = set()
    want = cfg.fanout - len(leaf.children)
    for _ in range(max(0, want)):
        available = [
            s
            for s in applicable_strategies(leaf.tree, StrategyHistory(leaf.history))
            if s.id not in chosen
        ]
        mode = _choose_mode_for(mutator, available, rng, cfg.rule_prob)
        if mode is None:
            continue
        strategy = rng.choice(available) if mode == RULE_GUIDED else None
        request = MutationRequest(
            parent_sql=leaf.sql,
            seed_sql=tree.seed_sql,
            schema_ddl=schema_ddl,
            mode=mode,
            strategy=strategy,
            rng_seed=rng.randrange(1 << 30),
        )
        try:
            result = mutator.mutate(request)
        except (ProviderUnavailable, ExtractionError, TransformError):
            continue
        candidate = result.candidate_sql
        if candidate == leaf.sql or candidate in sibling_sql:
            if strategy is not None:
                chosen.add(strategy.id)
            continue
        history = leaf.history + ((strategy.id,) if strategy else ())
        child = tree.new_node(candidate, leaf, history, strategy.id if strategy else None)
        if strategy is not None:
            chosen.add(strategy.id)
        sibling_sql.add(candidate)
        created.append(child)
        try:
            dispatcher.dispatch(candidate)
        except DispatchQueueFull:
            dispatcher.execute_sync(candidate)
    if not created:
        if not leaf.children:
            leaf.terminal = True
        else:
            leaf.no_more_expansion = True
    return created


def _choose_mode_for(mutator: Mutator, available, rng: random.Random, rule_prob: float):
    mode = choose_mode(StrategyHistory(), available, rng.randrange(1 << 30), rule_prob)
    if mode == FREE_FORM and mutator.model_client is None:
        # Stay fully functional without a remote model: fall back to rules.
        if available:
            return RULE_GUIDED
        return None
    if mode == RULE_GUIDED and not available:
        return None
    return mode


# -- the loop ----------------------------------------------------------------------------


def run_search(
    seed_sql: str,
    backend,
    cfg: MctsConfig,
    mutator: Mutator,
    exec_config: ExecutorConfig | None = None,
    resume: SearchTree | None = None,
) -> SearchTree:
    """Run the full search for one seed and return the tree with every
    dispatched outcome resolved. Deterministic for a fixed rng_seed, a
    deterministic mutation boundary, and the simulated backend."""
    exec_config = exec_config or ExecutorConfig(timeout_seconds=300.0, warmup_runs=0, measured_runs=1)
    dispatcher = Dispatcher(backend, exec_config)
    schema_ddl = getattr(backend, "schema_ddl", "")

    canonical_seed = render(parse(seed_sql))
    seed_outcome = dispatcher.execute_sync(canonical_seed)
    if seed_outcome.status is not Status.OK:
        raise SeedInvalid(
            f"seed failed to execute: {seed_outcome.status.value}"
            f" ({seed_outcome.error_message or 'timeout'})"
        )
    if not seed_outcome.row_count:
        raise SeedInvalid("seed returned an empty result set")

    if resume is not None:
        if resume.seed_sql != canonical_seed:
            raise ValueError("checkpoint belongs to a different seed")
        tree = resume
        tree.cfg = cfg  # the active config governs the continued run
        rng = random.Random()
        if tree.rng_state is not None:
            rng.setstate(tree.rng_state)
    else:
        t0 = seed_outcome.latency_seconds
        h0 = seed_outcome.result_hash
        assert h0 is not None
        root = SearchNode(0, canonical_seed)
        root.outcome = seed_outcome
        root.phi = 1
        tree = SearchTree(
            canonical_seed, root, t0, h0, cfg, getattr(backend, "schema_id", "")
        )
        rng = random.Random(cfg.rng_seed)

    seed_tree = parse(canonical_seed)

    while tree.iterations_done < cfg.iterations:
        try:
            node = uct_select(tree.root, cfg.exploration_c, cfg.fanout)
        except AllTerminal:
            tree.halted = True
            break
        if node.n == 0 and node.parent is not None:
            _evaluate(node, tree, dispatcher, seed_tree, cfg)
        else:
            children = expand(node, tree, mutator, dispatcher, schema_ddl, cfg, rng)
            if children:
                _evaluate(children[0], tree, dispatcher, seed_tree, cfg)
            else:
                # Keep one backpropagation per iteration: re-propagate this
                # node's standing (zero for the never-simulated root).
                backpropagate(node, node.last_reward if node.last_reward is not None else 0.0)
        tree.iterations_done += 1

    _resolve_pending(tree, dispatcher)
    tree.rng_state = rng.getstate()
    dispatcher.close()
    return tree


def _evaluate(
    node: SearchNode,
    tree: SearchTree,
    dispatcher: Dispatcher,
    seed_tree: SqlTree,
    cfg: MctsConfig,
) -> None:
    if node.outcome is None:
        node.outcome = dispatcher.execute_sync(node.sql)
        _classify(node, tree)
    reward = simulate_reward(node, seed_tree, tree.t0, cfg)
    node.last_reward = reward
    backpropagate(node, reward)


def _classify(node: SearchNode, tree: SearchTree) -> None:
    assert node.outcome is not None
    node.phi = validity(node.outcome, tree.h0)
    # Invalid results are dead ends; timeouts stay expandable because their
    # children are re-validated against the seed hash directly.
    if node.phi == 0 and node.outcome.status is not Status.TIMEOUT:
        node.terminal = True


def _resolve_pending(tree: SearchTree, dispatcher: Dispatcher) -> None:
    for node in tree.nodes:
        if node.outcome is None:
            node.outcome = dispatcher.execute_sync(node.sql)
            _classify(node, tree)
