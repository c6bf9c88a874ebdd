from setuptools import setup, find_packages

with open("README.md") as f:
    readme = f.read()

setup(
    name="occsearch",
    version="0.1.0",
    description="Object search in simulated tabletop clutter",
    long_description=readme,
    long_description_content_type="text/markdown",
    packages=find_packages(exclude=("tests", "docs")),
    include_package_data=True,
    package_data={"occsearch": ["schema/*.xsd"]},
    python_requires=">=3.9",
    install_requires=[
        "construct >= 2.9.45",
        "lxml >= 4.2.3",
        "pycryptodome >= 3.6.4",
        "isodate >= 0.6.0",
        "numpy >= 1.20",
        "scipy >= 1.6",
        "tqdm >= 4.50"
    ],
    entry_points={
        "console_scripts": [
            "occsearch = occsearch.cli:main",
        ]
    }
)
