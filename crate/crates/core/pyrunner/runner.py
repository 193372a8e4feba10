"""Run one test job per input line and print one JSON result line for each.

Each job runs in a fresh interpreter with a scrubbed environment, a
temporary working directory and an address-space limit.
"""
import json
import os
import subprocess
import sys
import tempfile

SCHEMA = 1
TAIL = 2000

WORKER = r'''
import ast, io, json, sys, unittest

def canon(v):
    if isinstance(v, dict):
        items = sorted(((canon(k), canon(x)) for k, x in v.items()))
        return "{" + ", ".join(k + ": " + x for k, x in items) + "}"
    if isinstance(v, (set, frozenset)):
        body = ", ".join(sorted(canon(x) for x in v))
        if isinstance(v, frozenset):
            return "frozenset({" + body + "})" if v else "frozenset()"
        return "{" + body + "}" if v else "set()"
    if isinstance(v, list):
        return "[" + ", ".join(canon(x) for x in v) + "]"
    if isinstance(v, tuple):
        if len(v) == 1:
            return "(" + canon(v[0]) + ",)"
        return "(" + ", ".join(canon(x) for x in v) + ")"
    return repr(v)

class Collect(unittest.TestResult):
    def __init__(self):
        super().__init__()
        self.outcomes = {}
    def addSuccess(self, test):
        self.outcomes[test.id()] = "pass"
    def addFailure(self, test, err):
        self.outcomes[test.id()] = "fail"
    def addError(self, test, err):
        self.outcomes[test.id()] = "error"
    def addExpectedFailure(self, test, err):
        self.outcomes[test.id()] = "pass"
    def addUnexpectedSuccess(self, test):
        self.outcomes[test.id()] = "fail"
    def addSkip(self, test, reason):
        self.outcomes[test.id()] = "pass"

def main():
    job = json.loads(sys.stdin.read())
    ns = {"__name__": "unit", "__builtins__": __builtins__}
    exec(compile(job["code"], "unit.py", "exec"), ns)
    out = {"tests": [], "returned_value": None}
    if job["entry"] == "function_call":
        spec = job["call_spec"]
        args = ast.literal_eval("(" + spec["args"] + ",)") if spec["args"].strip() else ()
        out["returned_value"] = canon(ns[spec["function"]](*args))
    else:
        ns["__name__"] = "tests"
        exec(compile(job.get("test_code") or "", "tests.py", "exec"), ns)
        loader = unittest.TestLoader()
        suite = unittest.TestSuite()
        for name in sorted(ns):
            obj = ns[name]
            if isinstance(obj, type) and issubclass(obj, unittest.TestCase) and obj is not unittest.TestCase:
                suite.addTests(loader.loadTestsFromTestCase(obj))
        result = Collect()
        saved = sys.stdout
        sys.stdout = io.StringIO()
        try:
            suite.run(result)
        finally:
            sys.stdout = saved
        for tid in sorted(result.outcomes):
            name = tid[len("tests."):] if tid.startswith("tests.") else tid
            out["tests"].append({"name": name, "outcome": result.outcomes[tid]})
    sys.stdout.write("\n" + json.dumps(out) + "\n")

main()
'''


def limit(memory_mb):
    def apply():
        try:
            import resource
            if memory_mb:
                size = int(memory_mb) * 1024 * 1024
                resource.setrlimit(resource.RLIMIT_AS, (size, size))
        except (ImportError, ValueError, OSError):
            pass
        os.setsid()
    return apply


def result(status, tests=None, returned=None, stderr="", error=None):
    return {
        "schema": SCHEMA,
        "status": status,
        "tests": tests or [],
        "returned_value": returned,
        "stderr_tail": stderr[-TAIL:],
        "error": error,
    }


def check(job):
    if not isinstance(job, dict):
        return "job must be an object"
    if not isinstance(job.get("code"), str):
        return "code must be a string"
    t = job.get("timeout_s")
    if not isinstance(t, (int, float)) or isinstance(t, bool) or t <= 0:
        return "timeout_s must be a positive number"
    entry = job.get("entry")
    if entry == "function_call":
        spec = job.get("call_spec")
        if not isinstance(spec, dict) or not isinstance(spec.get("function"), str) or not isinstance(spec.get("args"), str):
            return "function_call needs call_spec {function, args}"
    elif entry == "unittest_module":
        if job.get("call_spec") is not None:
            return "unittest_module takes no call_spec"
    else:
        return "entry must be unittest_module or function_call"
    return None


def run_job(job):
    problem = check(job)
    if problem:
        return result("crash", error=problem)
    with tempfile.TemporaryDirectory(prefix="nameobf-") as cwd:
        env = {"PATH": os.defpath, "PYTHONHASHSEED": "0", "HOME": cwd, "TMPDIR": cwd, "LC_ALL": "C.UTF-8"}
        try:
            proc = subprocess.Popen(
                [sys.executable, "-I", "-c", WORKER],
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.PIPE,
                cwd=cwd,
                env=env,
                preexec_fn=limit(job.get("memory_mb")),
            )
        except OSError as e:
            return result("crash", error=str(e))
        try:
            out, err = proc.communicate(json.dumps(job).encode(), timeout=job["timeout_s"])
        except subprocess.TimeoutExpired:
            try:
                os.killpg(proc.pid, 9)
            except OSError:
                proc.kill()
            out, err = proc.communicate()
            return result("timeout", stderr=err.decode("utf-8", "replace"))
    err = err.decode("utf-8", "replace")
    lines = out.decode("utf-8", "replace").strip().splitlines()
    if proc.returncode != 0 or not lines:
        return result("crash", stderr=err, error="exit status %d" % proc.returncode)
    try:
        data = json.loads(lines[-1])
    except ValueError:
        return result("crash", stderr=err, error="worker printed no result")
    return result("ok", data["tests"], data["returned_value"], err)


def main():
    for line in sys.stdin:
        if not line.strip():
            continue
        try:
            job = json.loads(line)
        except ValueError as e:
            res = result("crash", error="malformed job: %s" % e)
        else:
            res = run_job(job)
        sys.stdout.write(json.dumps(res, sort_keys=True) + "\n")
        sys.stdout.flush()


if __name__ == "__main__":
    main()
