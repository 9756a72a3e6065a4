import pytest

from helpers import corpus, run_cli

HOTEL = ["--model", corpus("hotel", "model.yaml"), "--constraints", corpus("hotel", "rules.ocl")]


def check(*extra, name="hotel"):
    return run_cli("check", *HOTEL, *extra) if name == "hotel" else run_cli("check", *extra)


def test_clean_snapshot_exits_zero():
    code, out, _ = check("--snapshot", corpus("hotel", "ok.yaml"))
    assert code == 0 and "violated" not in out.split("\n\n")[-1].replace("0 violated", "")


@pytest.mark.parametrize("mutant", ["mutant_rule1", "mutant_rule2", "mutant_rule3"])
def test_mutants_exit_one_with_one_violation(mutant):
    code, out, _ = check("--snapshot", corpus("hotel", f"{mutant}.yaml"), "--format", "machine")
    assert code == 1
    assert sum(line.endswith("| violated") for line in out.splitlines()) == 1


def test_machine_lines_are_sorted_and_format_free_of_exit_code():
    args = ("--snapshot", corpus("hotel", "mutant_rule1.yaml"))
    code_m, out, _ = check(*args, "--format", "machine")
    code_t, _, _ = check(*args)
    lines = out.splitlines()
    assert lines == sorted(lines) and code_m == code_t == 1
    assert all(line.count(" | ") == 2 for line in lines)


def test_all_instances_on_integer_is_static_error():
    code, _, err = run_cli("check", "--model", corpus("hotel", "model.yaml"), "--snapshot",
                           corpus("hotel", "ok.yaml"), "--constraints", corpus("hotel", "allinstances.ocl"))
    assert code == 2 and "allInstances" in err


def test_invocation_via_cli():
    code, out, _ = check("--invocation", corpus("hotel", "uses_bad_post.yaml"), "--format", "machine")
    assert code == 1 and "Bathroom::uses:post | " in out


def test_missing_file_is_load_error():
    code, _, err = check("--snapshot", corpus("hotel", "nope.yaml"))
    assert code == 2 and err


def test_eval_examples():
    model = ("--model", corpus("hotel", "model.yaml"), "--snapshot", corpus("hotel", "ok.yaml"))
    assert run_cli("eval", *model, "--self", "r1", "guests->size")[:2] == (0, "3\n")
    assert run_cli("eval", *model, "1/0 = 1/0")[:2] == (0, "true\n")
    assert run_cli("eval", *model, "1/0 == 1/0")[:2] == (1, "undefined\n")
    assert run_cli("eval", *model, "1 +")[0] == 2
    assert run_cli("eval", *model, "self.beds")[0] == 2


def test_typecheck_exit_codes():
    typing = ("--model", corpus("typing", "model.yaml"))
    assert run_cli("typecheck", *HOTEL)[0] == 0
    assert run_cli("typecheck", *typing, "--constraints", corpus("typing", "joint_self.ocl"))[0] == 2
    code, _, err = run_cli("typecheck", *typing, "--constraints", corpus("typing", "if_ambiguous.ocl"))
    assert code == 2 and "Floating, Vehicle" in err
    assert run_cli("typecheck", *typing, "--constraints", corpus("typing", "if_real.ocl"))[0] == 0


SCALAR = ("--model", corpus("scalar", "model.yaml"), "--snapshot", corpus("scalar", "a0.yaml"),
          "--constraints", corpus("scalar", "equation.ocl"))


def test_divergence_exits_two():
    code, _, err = run_cli("check", *SCALAR)
    assert code == 2 and "diverges" in err


def test_max_iter_flag_and_env(monkeypatch):
    code, _, err = run_cli("check", *SCALAR, "--max-iter", "2")
    assert code == 2 and "after 2 iteration" in err
    monkeypatch.setenv("OCLK_MAX_ITER", "3")
    code, _, err = run_cli("check", *SCALAR)
    assert code == 2 and "after 3 iteration" in err
    code, _, err = run_cli("check", *SCALAR, "--max-iter", "1")
    assert "after 1 iteration" in err


def test_undefined_ok_downgrades_undefined_only(tmp_path):
    rule = tmp_path / "u.ocl"
    rule.write_text("context Room invariant u: 1 / 0 > 1\n")
    args = ("--model", corpus("hotel", "model.yaml"), "--snapshot", corpus("hotel", "ok.yaml"),
            "--constraints", rule)
    assert run_cli("check", *args)[0] == 1
    assert run_cli("check", *args, "--undefined-ok")[0] == 0
    code, _, _ = check("--snapshot", corpus("hotel", "mutant_rule1.yaml"), "--undefined-ok")
    assert code == 1


def test_two_snapshots_check_constancy():
    args = ("--model", corpus("customer", "model.yaml"), "--constraints", corpus("customer", "constant.ocl"),
            "--snapshot", corpus("customer", "pre.yaml"))
    assert run_cli("check", *args, "--snapshot", corpus("customer", "post_ok.yaml"))[0] == 0
    code, out, _ = run_cli("check", *args, "--snapshot", corpus("customer", "post_changed.yaml"))
    assert code == 1 and "constant attribute 'dateOfBirth' of 'cu1'" in out


def test_trace_command():
    cards = ("--model", corpus("cards", "model.yaml"), "--constraints", corpus("cards", "invalidate.ocl"),
             "--constraints", corpus("cards", "expiry.ocl"))
    assert run_cli("trace", *cards, "--trace", corpus("cards", "called_polite.yaml"))[0] == 0
    code, out, _ = run_cli("trace", *cards, "--trace", corpus("cards", "action_missing.yaml"), "--format", "machine")
    assert code == 1 and "violated" in out


def test_usage_errors_exit_two():
    assert run_cli("check")[0] == 2
