# SPDX-License-Identifier: Apache-2.0
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

from pathlib import Path

from setuptools import setup

about = {}
with open("src/mesdopt/_about.py") as fp:
    exec(fp.read(), about)

# Read the contents of the README file.
this_directory = Path(__file__).parent
long_description = (this_directory / "README.md").read_text()

setup(
    name="mesdopt",
    description="Day-ahead co-optimization of mobile energy storage journeys"
    " and dispatch on a distribution grid",
    version=about["__version__"],
    classifiers=[
        "License :: OSI Approved :: Apache Software License",
        "Intended Audience :: Science/Research",
        "Operating System :: OS Independent",
        "Development Status :: 4 - Beta",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Programming Language :: Python :: 3.13",
        "Programming Language :: Python :: Implementation :: CPython",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Typing :: Typed",
    ],
    package_data={
        "mesdopt": [
            "py.typed",
            "scenarios/*.json",
            "scenarios/profiles/*.csv",
        ]
    },
    package_dir={"": "src"},
    packages=["mesdopt"],
    long_description=long_description,
    long_description_content_type="text/markdown",
    install_requires=[
        "matplotlib>=3.5",
        "mip>=1.14",
        "networkx>=2.6",
        "numpy>=1.21",
        "pandas>=1.5",
        "scipy>=1.9",
    ],
    entry_points={"console_scripts": ["mesdopt = mesdopt._cli:main"]},
    python_requires=">=3.9",
    zip_safe=False,
)
