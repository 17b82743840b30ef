"""Quasibosons as deformed oscillators: realization and entanglement source package"""
