"""Test suite for Literature Search Application"""