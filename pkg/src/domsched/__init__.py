"""Scheduling with dominant interferers via max-sum belief propagation."""
