"""Shared record types, typed frames and grid containers."""
