#!/usr/bin/env python3
"""
bootlab Quick Start Script

Creates a virtual environment, installs the numeric stack, writes a .env
and runs a smoke command through the CLI. Run this after cloning.
"""

import shutil
import subprocess
import sys
from pathlib import Path

# Color codes for terminal output
GREEN = "\033[92m"
YELLOW = "\033[93m"
RED = "\033[91m"
BLUE = "\033[94m"
RESET = "\033[0m"
BOLD = "\033[1m"


def banner(text):
    print(f"\n{BOLD}{BLUE}{text}{RESET}")
    print(f"{BLUE}{'-' * len(text)}{RESET}")


def say(kind, text):
    """One status line: ok, warn, fail or info."""
    mark, color = {"ok": ("✓", GREEN), "warn": ("⚠", YELLOW), "fail": ("✗", RED), "info": ("ℹ", BLUE)}[kind]
    print(f"{color}{mark}{RESET} {text}")


def run_command(cmd, description):
    """Run a command and report status."""
    say("info", f"{description}...")
    try:
        result = subprocess.run(cmd, capture_output=True, text=True, timeout=900)
    except subprocess.TimeoutExpired:
        say("fail", f"{description} - Timeout")
        return False
    if result.returncode == 0:
        say("ok", f"{description} - OK")
        return True
    say("fail", f"{description} - Failed")
    if result.stderr:
        print(f"  Error: {result.stderr[:200]}")
    return False


def venv_python() -> str:
    if sys.platform == "win32":
        return str(Path("venv") / "Scripts" / "python.exe")
    return str(Path("venv") / "bin" / "python")


def check_prerequisites():
    banner("Checking Prerequisites")
    if sys.version_info < (3, 10):
        say("fail", f"Python 3.10+ required (found {sys.version_info.major}.{sys.version_info.minor})")
        return False
    say("ok", f"Python {sys.version_info.major}.{sys.version_info.minor} installed")
    return True


def setup_environment():
    """Copy .env.example to .env unless one exists."""
    banner("Environment Setup")
    env_path = Path(".env")
    if env_path.exists():
        say("info", "Keeping existing .env file")
        return True
    example = Path(".env.example")
    if not example.exists():
        say("fail", ".env.example not found")
        return False
    shutil.copy(example, env_path)
    say("ok", "Created .env from template")
    print("\nSettings you may want to change:")
    print("  - BOOTLAB_THREADS (worker processes, 'max' for all cores)")
    print("  - LOG_LEVEL")
    print("  - DEFAULT_TOL / TABLE_TOL (quadrature tolerances)")
    return True


def install_dependencies():
    banner("Dependencies")
    if not Path("venv").exists():
        if not run_command([sys.executable, "-m", "venv", "venv"], "Create venv"):
            return False
    return run_command([venv_python(), "-m", "pip", "install", "-r", "requirements.txt"], "Installing requirements")


def smoke_test():
    """Compile the closure kernels once and check a known value."""
    banner("Verification")
    ok = run_command(
        [venv_python(), "-m", "bootlab.cli.main", "close", "--spec-json",
         '{"kind": "uniform", "d": 2, "n": 4, "r": 2}', "--summary"],
        "Closure kernel",
    )
    return ok and run_command(
        [venv_python(), "-m", "bootlab.cli.main", "lambda", "--d", "2", "--r", "2"],
        "lambda(2, 2) quadrature",
    )


def print_next_steps():
    banner("Next Steps")
    print("  source venv/bin/activate")
    print("  python -m bootlab.cli.main table --format text")
    print("  python -m bootlab.cli.main pc --spec-json '{\"kind\": \"uniform\", \"d\": 2, \"n\": 64, \"r\": 2}'")
    print("  pytest                 # fast suite")
    print("  pytest -m slow         # long sweeps and the full lambda table")


def main():
    steps = [
        (check_prerequisites, "Prerequisites check"),
        (setup_environment, "Environment setup"),
        (install_dependencies, "Installation"),
        (smoke_test, "Verification"),
    ]
    for step_func, step_name in steps:
        if not step_func():
            say("fail", f"\n{step_name} failed!")
            sys.exit(1)

    banner("Setup Complete!")
    print_next_steps()


if __name__ == "__main__":
    try:
        main()
    except KeyboardInterrupt:
        print(f"\n\n{YELLOW}Setup cancelled by user{RESET}\n")
        sys.exit(1)
