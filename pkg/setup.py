import setuptools

with open("README", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setuptools.setup(
    name="hottlab",
    version="1.0.0",
    description="A simulation lab for online low-rank matrix completion bandits",
    long_description=long_description,
    long_description_content_type="text/x-rst",
    classifiers=[
        "Programming Language :: Python :: 3",
        "License :: OSI Approved :: BSD License",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
    ],
    packages=setuptools.find_packages(include=["hottlab"]),
    scripts=["run_lab.py"],
    install_requires=[
        "numpy>=1.20",
        "scipy>=1.6",
        "networkx>=2.5",
        "pandas>=1.5",
        "tqdm>=4.50",
    ],
    python_requires=">=3.7",
)
