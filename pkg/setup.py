import io
import os
from setuptools import find_packages, setup

def read(*paths, **kwargs):
    content = ""
    with io.open(
        os.path.join(os.path.dirname(__file__), *paths),
        encoding=kwargs.get("encoding", "utf8"),
    ) as open_file:
        content = open_file.read().strip()
    return content

def read_requirements(path):
    return [
        line.strip()
        for line in read(path).split("\n")
        if not line.startswith(('"', "#", "-", "git+"))
    ]

setup(
    name="saito_sdk",
    version="1.0.0",
    description="Exact Saito flat coordinates and Frobenius potentials for the E6, E7 and E8 orbit spaces.",
    long_description=read("README.md"),
    long_description_content_type="text/markdown",
    author="Saito SDK developers",
    packages=find_packages(exclude=["*/tests", ".github"]),
    package_data={"saito_sdk": ["fixtures/*.ini", "fixtures/SHA256SUMS"]},
    platforms=["Linux"],
    python_requires=">=3.9",
    install_requires=read_requirements("requirements.txt"),
    extras_require={"tests": ["pytest"]},
    entry_points={"console_scripts": ["saito-sdk=saito_sdk.cli:main"]},
)
