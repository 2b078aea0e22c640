#!/usr/bin/env python3
"""CRN Sensor Network Simulator

Cluster updating, subset formation and sleep scheduling for a cognitive-radio
network sensed by an infrastructure sensor network.
"""
import sys

from crnsim.cli import main

if __name__ == "__main__":
    sys.exit(main())
