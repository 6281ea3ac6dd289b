import setuptools

# Read the long description from the README.md file
with open("README.md", "r", encoding="utf-8") as fh:
    long_description = fh.read()

setuptools.setup(
    name="sel-lab",  # Package name, must be unique on PyPI
    version="0.3.0",  # keep in step with sel_lab.__version__
    author="ydf0509",
    author_email="ydf0509@example.com",
    description="A numerical laboratory for singular elliptic systems with Pucci-type operators",
    long_description=long_description,
    long_description_content_type="text/markdown",
    packages=setuptools.find_packages(exclude=["tests", "tests.*", "examples", "examples.*"]),
    install_requires=[
        'numpy',
        'scipy',
        'nb_log',
        'python-json-logger',  # JSON formatter of nb_log_config.py
    ],

    # Define optional dependencies
    # Users can install all extra features with: pip install sel-lab[all]
    extras_require={
        'progress': ['tqdm'],  # For sweep(..., progress=True) and --progress
        'test': ['pytest'],
        'all': ['tqdm', 'pytest'],
    },
    entry_points={
        'console_scripts': ['sel-lab = sel_lab.cli:main'],
    },

    classifiers=[
        "Development Status :: 4 - Beta",
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
        "Topic :: Scientific/Engineering :: Mathematics",
        "Intended Audience :: Science/Research",
    ],

    python_requires='>=3.8',
)
