"""Smoke test for the hubforge extension module.

    pip install maturin && maturin develop -m crates/py/Cargo.toml
    python python/smoke_test.py
"""

import hubforge


def main():
    lin = hubforge.AttachmentSpec("linear:a=1,b=1")
    assert str(lin) == "linear:a=1,b=1"
    assert lin == hubforge.AttachmentSpec.linear(1.0, 1.0)
    assert lin.weight(3) == 4.0

    tree = hubforge.grow(lin, 200, seed=1, checkpoints=[10, 100])
    assert tree["nodes"] == 201
    assert len(tree["parents"]) == 200
    assert sum(tree["out_degrees"]) == 200
    assert [c["nodes"] for c in tree["trace"]["checkpoints"]] == [10, 100]

    s = hubforge.malthus_sum(lin, 3.0)
    assert s["certified"] and abs(s["partial"] + s["tail_bound"] - 0.5) < 1e-9

    report = hubforge.classify(hubforge.AttachmentSpec.power(2.0, 1.0))
    assert report["verdict"] == "UniquePersistentHub"
    assert report["witnesses"]["kappa"] == 1.0
    assert hubforge.classify(hubforge.AttachmentSpec.constant(1.0))["verdict"] == "NoPersistentHub"

    k = hubforge.killed_size(hubforge.AttachmentSpec.constant(1.0), 2.0, replicates=4000, seed=7)
    assert abs(k["mean"] - 2.0) <= 3 * k["std_error"]

    table = hubforge.persistence(lin, [10, 100], 300, replicates=8, seed=3)
    assert len(table["rows"]) == 8 * 3  # checkpoints plus n_max

    race = hubforge.overtake(lin, 3, 1.0, replicates=2000)
    assert race["empirical"] <= race["bound"] + 3 * race["std_error"]

    try:
        hubforge.AttachmentSpec("nope:x=1")
    except ValueError:
        pass
    else:
        raise AssertionError("bad spec accepted")
    try:
        hubforge.killed_size(hubforge.AttachmentSpec.constant(1.0), 1.0)
    except ArithmeticError:
        pass
    else:
        raise AssertionError("divergent expectation accepted")

    print("hubforge python smoke test: ok")


if __name__ == "__main__":
    main()
