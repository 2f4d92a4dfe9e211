from slowforge.sqltree import complexity_profile, parse


def test_trivial_query_has_no_predicates_or_subqueries():
    p = complexity_profile(parse("SELECT 1"))
    assert p.predicate_count == 0
    assert p.subquery_count == 0
    assert p.join_count == 0
    assert p.nesting_depth == 0
    assert p.token_count >= 2


def test_hand_counted_example():
    # WHERE holds two atoms (a > 1, b IN ...) and the IN source is one subquery.
    p = complexity_profile(parse("SELECT * FROM t WHERE a > 1 AND b IN (SELECT c FROM u)"))
    assert p.predicate_count == 2
    assert p.subquery_count == 1
    assert p.nesting_depth == 1


def test_join_counting_rules():
    explicit = complexity_profile(
        parse("SELECT * FROM a JOIN b ON a.k = b.k LEFT JOIN c ON b.j = c.j")
    )
    assert explicit.join_count == 2
    comma = complexity_profile(parse("SELECT * FROM a, b, c WHERE a.k = b.k"))
    assert comma.join_count == 2
    single = complexity_profile(parse("SELECT * FROM a"))
    assert single.join_count == 0


def test_on_clause_predicates_counted():
    p = complexity_profile(parse("SELECT * FROM a JOIN b ON a.k = b.k AND a.j > 2"))
    assert p.predicate_count == 2


def test_having_predicates_counted():
    p = complexity_profile(
        parse("SELECT x, count(*) FROM t GROUP BY x HAVING count(*) > 3 AND x LIKE 'a%'")
    )
    assert p.predicate_count == 2


def test_projection_comparisons_not_counted():
    p = complexity_profile(parse("SELECT CASE WHEN a > 1 THEN 1 ELSE 0 END FROM t"))
    assert p.predicate_count == 0


def test_nesting_depth_counts_stacked_subqueries():
    p = complexity_profile(
        parse("SELECT * FROM (SELECT * FROM (SELECT x FROM t) AS inner1) AS outer1")
    )
    assert p.subquery_count == 2
    assert p.nesting_depth == 2


def test_cte_counts_as_subquery():
    p = complexity_profile(parse("WITH c AS (SELECT x FROM t) SELECT * FROM c"))
    assert p.subquery_count == 1
    assert p.nesting_depth == 1


def test_profile_invariant_under_whitespace_and_case():
    a = complexity_profile(parse("select  X from T where x>1 and x in(select y from u)"))
    b = complexity_profile(parse("SELECT x FROM t WHERE x > 1 AND x IN (SELECT y FROM u)"))
    assert a == b
