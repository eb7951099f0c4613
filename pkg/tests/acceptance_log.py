# one line per acceptance criterion, filled in by test_acceptance.py
RESULTS: list[str] = []
