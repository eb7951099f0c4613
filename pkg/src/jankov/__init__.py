"""Characteristic identities of finite algebras with a ternary deductive term."""
