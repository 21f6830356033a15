from setuptools import setup, find_packages

setup(
    name="tvselect",
    version="0.1.0",
    packages=find_packages(where="src"),
    package_dir={"": "src"},
    entry_points={
        "console_scripts": [
            "tvselect = tvselect.cli:main",
        ],
    },
    install_requires=[
        "PyYAML",
        "click>=8.0.0",
        "rich>=12.0.0",
        "pydantic>=2.0.0",
        "numpy>=1.22",
        "scipy>=1.8",
        "pandas>=1.5",
    ],
    extras_require={
        "dev": [
            "pytest>=7.0.0",
        ],
    },
    python_requires=">=3.8",
    author="tvselect Contributors",
    description="Thompson Variable Selection - combinatorial Beta-Bernoulli bandits for subset selection",
    long_description=open("README.md").read(),
    long_description_content_type="text/markdown",
    classifiers=[
        "Development Status :: 3 - Alpha",
        "Intended Audience :: Science/Research",
        "License :: OSI Approved :: MIT License",
        "Programming Language :: Python :: 3",
        "Programming Language :: Python :: 3.8",
        "Programming Language :: Python :: 3.9",
        "Programming Language :: Python :: 3.10",
        "Programming Language :: Python :: 3.11",
        "Programming Language :: Python :: 3.12",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
)
