#!/usr/bin/env python3

from odeident.cli import run_odeident

if __name__ == '__main__':
    run_odeident()
