#!/usr/bin/env python3
"""
Setup script for the Flint compiler and simulated-chain interpreter.
"""

import os
import subprocess
import sys


def install_requirements():
    """Install Python requirements"""
    print("Installing Python requirements...")
    try:
        subprocess.check_call([sys.executable, "-m", "pip", "install", "-r", "requirements.txt"])
        print("✓ Requirements installed successfully")
    except subprocess.CalledProcessError as e:
        print(f"✗ Failed to install requirements: {e}")
        return False
    return True


def setup_env_file():
    """Setup environment file"""
    if not os.path.exists(".env"):
        if os.path.exists(".env.example"):
            print("Creating .env file from .env.example...")
            with open(".env.example", "r") as src, open(".env", "w") as dst:
                dst.write(src.read())
            print("✓ .env file created")
        else:
            print("⚠ .env.example not found")
    else:
        print("✓ .env file already exists")


def check_keccak_backend():
    """keccak-256 comes from pycryptodome"""
    print("Checking keccak-256 support...")
    try:
        from Crypto.Hash import keccak
        digest = keccak.new(digest_bits=256, data=b"").hexdigest()
        print(f"✓ pycryptodome keccak-256 available ({digest[:8]}...)")
    except ImportError:
        print("⚠ pycryptodome not available. Install it with: pip install pycryptodome")


def main():
    """Main setup function"""
    print("Flint Toolchain Setup")
    print("=" * 30)

    if not install_requirements():
        sys.exit(1)

    setup_env_file()
    check_keccak_backend()

    print("\nSetup complete!")
    print("\nNext steps:")
    print("1. Run: python src/flint_main.py check contracts/bank.flint")
    print("2. Run: python src/flint_main.py run contracts/bank.flint --script scripts/bank.jsonl")
    print("3. Run: python evaluation_demo.py")


if __name__ == "__main__":
    main()
