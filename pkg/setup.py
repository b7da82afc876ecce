#!/usr/bin/env python
#
# Copyright 2024 The DMMF Engine Developers
#
# Licensed under the Apache License, Version 2.0 (the "License"): you may
# not use this file except in compliance with the License. You may obtain
# a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS, WITHOUT
# WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied. See the
# License for the specific language governing permissions and limitations
# under the License.

from setuptools import setup, Command

import os
import sys

import dmmflib

failed = False


def run_test_suite():
    import unittest

    def mark_failed():
        global failed
        failed = True

    class _TrackingTextTestResult(unittest.TextTestResult):
        def addError(self, test, err):
            unittest.TextTestResult.addError(self, test, err)
            mark_failed()

        def addFailure(self, test, err):
            unittest.TextTestResult.addFailure(self, test, err)
            mark_failed()

    class TrackingTextTestRunner(unittest.TextTestRunner):
        def _makeResult(self):
            return _TrackingTextTestResult(
                self.stream, self.descriptions, self.verbosity)

    original_cwd = os.path.abspath(os.getcwd())
    os.chdir('tests')
    suite = unittest.defaultTestLoader.discover('.', top_level_dir='..')
    runner = TrackingTextTestRunner(verbosity=2)
    runner.run(suite)
    os.chdir(original_cwd)

    return failed


class CoverageCommand(Command):
    """setup.py command to run code coverage of the test suite."""
    description = "Create an HTML coverage report from running the full test suite."
    user_options = []

    def initialize_options(self):
        pass

    def finalize_options(self):
        pass

    def run(self):
        try:
            import coverage
        except ImportError:
            print("Could not import coverage. Please install it and try again.")
            exit(1)
        cov = coverage.coverage(source=['dmmflib'])
        cov.start()
        run_test_suite()
        cov.stop()
        cov.html_report(directory='coverage_report')


class TestCommand(Command):
    """setup.py command to run the whole test suite."""
    description = "Run test full test suite."
    user_options = []

    def initialize_options(self):
        pass

    def finalize_options(self):
        pass

    def run(self):
        failed = run_test_suite()
        if failed:
            sys.exit(1)


setup(
    author="The DMMF Engine Developers",

    cmdclass={'coverage': CoverageCommand,
              'test': TestCommand},

    description="Deterministic block-clocked engine for decentralised multi-manager funds.",

    license="http://www.apache.org/licenses/LICENSE-2.0",

    name="dmmf-engine",

    packages=["dmmflib",
              "dmmflib.execution",
              "dmmflib.scenario",
              "dmmflib.strategies"],

    package_data={"dmmflib": ["default/logging.conf"]},

    python_requires=">=3.8",

    install_requires=["numpy>=1.17"],

    extras_require={"test": ["pytest", "pytest-cov", "coverage"]},

    entry_points={"console_scripts": ["dmmf = dmmflib.cli:main"]},

    version=dmmflib.__version__,

    classifiers=[
        "Programming Language :: Python :: 3",
        "Development Status :: 3 - Alpha",
        "Environment :: Console",
        "Intended Audience :: Developers",
        "Intended Audience :: Financial and Insurance Industry",
        "License :: OSI Approved :: Apache Software License",
        "Operating System :: OS Independent",
        "Topic :: Office/Business :: Financial :: Investment",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
