"""Test suite for the denormalization cost simulator"""
