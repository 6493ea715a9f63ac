#!/usr/bin/env python3
"""
Bootstrap a local environment for the GLCM texture lab: venv, requirements,
a numeric-stack import check, .env and the generated/ folders.

    python setup.py            # full bootstrap
    python setup.py --smoke    # ...then run quick_test.py inside the venv
"""

import os
import shutil
import subprocess
import sys
from pathlib import Path

VENV_DIR = Path("venv")
OUTPUT_DIRS = ("generated", "generated/report", "generated/models")
STACK_MODULES = ("numpy", "scipy", "sklearn", "pandas", "pydantic", "dotenv", "pytest")


def venv_tool(name):
    scripts = VENV_DIR / ("Scripts" if os.name == "nt" else "bin")
    return str(scripts / name)


def run_step(args, label):
    print(f"🔄 {label}...")
    completed = subprocess.run(args, capture_output=True, text=True)
    if completed.returncode != 0:
        print(f"❌ {label} failed (exit {completed.returncode})")
        print(completed.stderr.strip() or completed.stdout.strip())
        return False
    print(f"✅ {label}")
    return True


def python_ok():
    if sys.version_info < (3, 9):
        print(f"❌ Python 3.9+ is required, found {sys.version.split()[0]}")
        return False
    print(f"✅ Python {sys.version.split()[0]}")
    return True


def create_venv():
    if VENV_DIR.exists():
        print(f"✅ Reusing {VENV_DIR}/")
        return True
    return run_step([sys.executable, "-m", "venv", str(VENV_DIR)], "Creating virtual environment")


def install_requirements():
    return run_step([venv_tool("pip"), "install", "-r", "requirements.txt"], "Installing requirements")


def check_stack():
    """Import every runtime and test package once inside the venv"""
    probe = "import " + ", ".join(STACK_MODULES)
    return run_step([venv_tool("python"), "-c", probe], f"Importing {', '.join(STACK_MODULES)}")


def write_env():
    env_file, template = Path(".env"), Path(".env.example")
    if env_file.exists():
        print("✅ Keeping existing .env")
    elif template.exists():
        shutil.copy(template, env_file)
        print("✅ .env created from .env.example (GLCMLAB_* defaults)")
    else:
        print("⚠️  No .env.example found, built-in defaults apply")
    return True


def make_output_dirs():
    for folder in OUTPUT_DIRS:
        Path(folder).mkdir(parents=True, exist_ok=True)
    print(f"✅ Output folders ready: {', '.join(OUTPUT_DIRS)}")
    return True


def smoke_run():
    return run_step([venv_tool("python"), "quick_test.py"], "Smoke run (quick_test.py)")


def main():
    print("🚀 GLCM texture lab setup")
    print("=" * 50)

    steps = [python_ok, create_venv, install_requirements, check_stack, write_env, make_output_dirs]
    if "--smoke" in sys.argv[1:]:
        steps.append(smoke_run)

    for step in steps:
        if not step():
            print(f"💥 Stopped at: {step.__name__}")
            return 1

    python = venv_tool("python")
    print("\n🎉 Environment ready")
    print("\n📋 Try:")
    print(f"  {python} src/cli.py generate --seed 42")
    print(f"  {python} src/cli.py sweep generated/dataset --jobs 4")
    print(f"  {python} src/cli.py probe --sides 64,128,256 --features")
    print(f"  {python} -m pytest -m \"not slow\"")
    return 0


if __name__ == "__main__":
    sys.exit(main())
