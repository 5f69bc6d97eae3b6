"""Counting representations of integers as sums of consecutive primes."""
