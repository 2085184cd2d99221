#!/usr/bin/env python3
"""
Test runner for the lateral Casimir force package
"""

import os
import subprocess
import sys


def run_tests(include_slow: bool = True) -> bool:
    """Run the test suite with coverage"""
    print("🧪 Running Casimir Tests...")
    print("=" * 50)

    command = [
        sys.executable, "-m", "pytest",
        "-v", "--cov=.", "--cov-report=term-missing",
        "--cov-report=html:htmlcov",
    ]
    if not include_slow:
        command += ["-m", "not slow"]

    try:
        subprocess.run(command, check=True, cwd=os.path.dirname(os.path.abspath(__file__)))
        print("✅ All tests passed!")
        return True
    except subprocess.CalledProcessError as e:
        print(f"❌ Tests failed with exit code: {e.returncode}")
        return False


def main():
    include_slow = "--fast" not in sys.argv[1:]
    success = run_tests(include_slow)

    print("\n" + "=" * 50)
    print(f"Test Results: {'✅ PASSED' if success else '❌ FAILED'}")
    sys.exit(0 if success else 1)


if __name__ == "__main__":
    main()
