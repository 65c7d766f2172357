"""Many-independent-objective search over test cases."""
