#!/usr/bin/env python3

"""CLI tools for lsv_metrology."""

# SPDX-License-Identifier: Apache-2.0
