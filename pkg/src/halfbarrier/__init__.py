"""Bohmian trajectories near a half-line barrier, a wall and in free space."""
