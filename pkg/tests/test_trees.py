import numpy as np
import pytest

from gen import example_tree, random_tree
from inorder.trees import (DEFAULT_HEAD_RULES, HeadRules, Internal, Leaf, Token,
                           TreeError, binarize, internal_nodes, leaf_indices,
                           marked_label, read_trees, split_label, unbinarize,
                           write_tree, write_trees)


def test_read_single_leaf():
    [(tree, tokens)] = read_trees("(NP (DT a))")
    assert tree == Internal("NP", (Leaf(0),))
    assert tokens == [Token("a", "DT")]


def test_read_example_sentence():
    tree, tokens = example_tree()
    assert [t.form for t in tokens] == ["The", "little", "boy", "likes", "red",
                                        "tomatoes", "."]
    assert [t.pos for t in tokens] == ["DT", "JJ", "NN", "VBZ", "JJ", "NNS", "."]
    assert tree.label == "S"
    assert len(tree.children) == 3


def test_read_reduced_six_token_form():
    text = ("(S (NP (DT The) (NN boy)) (VP (VBZ likes) "
            "(NP (JJ red) (NNS tomatoes))) (. .))")
    [(tree, tokens)] = read_trees(text)
    assert len(tokens) == 6
    assert leaf_indices(tree) == list(range(6))


def test_read_multiple_trees_and_whitespace():
    text = "(NP (DT a))\n\n  (NP\n    (DT b))  (NP (DT c))"
    parsed = read_trees(text)
    assert [toks[0].form for _, toks in parsed] == ["a", "b", "c"]


def test_outer_wrapper_unwrapped():
    [(tree, _)] = read_trees("((S (NP (DT a)) (VP (VB b))))")
    assert tree.label == "S"


def test_unbalanced_brackets_report_position():
    with pytest.raises(TreeError, match=r"line 1, column 1"):
        read_trees("(S (NP (DT a))")
    with pytest.raises(TreeError, match=r"stray '\)'"):
        read_trees("(NP (DT a)))")


def test_empty_constituent_rejected():
    with pytest.raises(TreeError, match="empty constituent"):
        read_trees("(S () (NP (DT a)))")


def test_unlabeled_multichild_rejected():
    with pytest.raises(TreeError, match="unlabeled constituent"):
        read_trees("((NP (DT a)) (NP (DT b)))")


def test_function_tags_stripped_and_kept():
    [(tree, _)] = read_trees("(S (NP-SBJ=1 (DT a)) (VP (VB b)))")
    assert tree.children[0].label == "NP"
    [(tree, _)] = read_trees("(S (NP-SBJ (DT a)) (VP (VB b)))", strip_tags=False)
    assert tree.children[0].label == "NP-SBJ"


def test_split_label_marks():
    assert split_label("NP-r*") == ("NP", "r", True)
    assert split_label("NP-l") == ("NP", "l", False)
    assert split_label("NP-SBJ-2") == ("NP", None, False)
    assert split_label("WHNP") == ("WHNP", None, False)


def test_bracket_escapes_round_trip():
    [(tree, tokens)] = read_trees("(NP (-LRB- -LRB-) (NN x) (-RRB- -RRB-))")
    assert tokens[0] == Token("(", "-LRB-")
    text = write_trees([(tree, tokens)])
    assert "-LRB-" in text
    assert read_trees(text) == [(tree, tokens)]


def test_write_read_identity_on_handmade_fixture():
    fixture = [
        "(NP (DT a))",
        "(S (NP (DT the) (NN cat)) (VP (VB sat)))",
        "(S (NP (NP (DT a) (NN dog)) (CC and) (NP (DT a) (NN cat))) (VP (VB ran)))",
        "(S (VP (VB go)))",
        "(X (Y (Z (P deep))))",
        "(S (NP (DT the) (JJ big) (JJ red) (NN dog)) (. .))",
    ]
    rng = np.random.default_rng(404)
    pairs = read_trees("\n".join(fixture))
    while len(pairs) < 50:
        pairs.append(random_tree(rng))
    text = write_trees(pairs)
    assert read_trees(text) == pairs


def test_example_tree_write_matches_normalized_input(example):
    tree, tokens = example
    expected = ("(S (NP (DT The) (JJ little) (NN boy)) "
                "(VP (VBZ likes) (NP (JJ red) (NNS tomatoes))) (. .))")
    assert write_tree(tree, tokens) == expected


# -- binarization -----------------------------------------------------------

def test_binarize_example_matches_reference_shape(example):
    tree, tokens = example
    bt = binarize(tree, DEFAULT_HEAD_RULES, tokens)
    assert write_tree(bt, tokens) == (
        "(S-r (NP-r (DT The) (NP-r* (JJ little) (NN boy))) "
        "(S-l* (VP-l (VBZ likes) (NP-r (JJ red) (NNS tomatoes))) (. .)))")


def test_binarize_unary_unchanged():
    [(tree, tokens)] = read_trees("(S (NP (DT a)))")
    bt = binarize(tree, DEFAULT_HEAD_RULES, tokens)
    assert bt == tree
    assert not any(n.star for n in internal_nodes(bt))


def test_binarize_marks_head_direction():
    [(tree, tokens)] = read_trees("(VP (VB eat) (NP (DT a) (NN cake)))")
    bt = binarize(tree, DEFAULT_HEAD_RULES, tokens)
    assert marked_label(bt) == "VP-l"  # verb is the VP head
    assert marked_label(bt.children[1]) == "NP-r"


def test_binarize_arity_and_star_placement():
    rng = np.random.default_rng(7)
    for _ in range(200):
        tree, tokens = random_tree(rng)
        bt = binarize(tree, DEFAULT_HEAD_RULES, tokens)
        for node in internal_nodes(bt):
            assert len(node.children) <= 2
            if node.star:
                assert len(node.children) == 2
        assert leaf_indices(bt) == leaf_indices(tree)


def test_binarize_round_trip_on_random_trees():
    rng = np.random.default_rng(13)
    for _ in range(200):
        tree, tokens = random_tree(rng)
        assert unbinarize(binarize(tree, DEFAULT_HEAD_RULES, tokens)) == tree


def test_unbinarize_rejects_starred_root():
    [(inner, _)] = read_trees("(S (NP (DT a)) (VP (VB b)))")
    starred = Internal(inner.label, inner.children, star=True)
    with pytest.raises(TreeError, match="star-marked root"):
        unbinarize(starred)


def test_read_trees_identity_under_binarized_output(example):
    tree, tokens = example
    bt = binarize(tree, DEFAULT_HEAD_RULES, tokens)
    assert read_trees(write_trees([(bt, tokens)])) == [(bt, tokens)]


# -- head rules --------------------------------------------------------------

def test_head_rules_parse_and_lookup():
    rules = HeadRules.from_text("NP right NN NNS\nVP left VB\n")
    # priorities dominate: NN is tried before NNS
    assert rules.head_index("NP", ["DT", "NN", "NNS"]) == 1
    # direction breaks ties within one priority label
    assert rules.head_index("NP", ["NN", "DT", "NN"]) == 2
    assert rules.head_index("VP", ["VB", "NP"]) == 0
    # no rule: rightmost child
    assert rules.head_index("QP", ["CD", "CD"]) == 1
    # rule but no priority hit: direction-most child
    assert rules.head_index("VP", ["MD", "ADVP"]) == 0


def test_head_rules_reject_malformed():
    with pytest.raises(TreeError, match="line 1"):
        HeadRules.from_text("NP sideways NN")


def test_default_rules_choose_vp_head_of_s(example):
    tree, tokens = example
    labels = ["NP", "VP", "."]
    assert DEFAULT_HEAD_RULES.head_index("S", labels) == 1


def test_head_rules_file_round_trip(tmp_path):
    path = tmp_path / "rules.txt"
    path.write_text("# heads\nNP right NN\nS left VP\n")
    rules = HeadRules.load(str(path))
    assert rules.head_index("S", ["NP", "VP"]) == 1
    [(tree, tokens)] = read_trees("(NP (DT a) (NN b) (NN c))")
    bt = binarize(tree, rules, tokens)
    assert marked_label(bt) == "NP-r"
    assert marked_label(bt.children[1]) == "NP-r*"
