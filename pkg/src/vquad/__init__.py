"""Veldkamp graphs, polar spaces and quadrangular algebras over small finite fields."""
