"""Functional matrix product state simulation of continuous-variable circuits."""
