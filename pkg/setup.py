from setuptools import find_packages, setup


setup(
    name='powersurrogate',
    packages=find_packages(include=['powersurrogate', 'powersurrogate.*']),
    version='0.1.0',
    install_requires=[
        'doit',
        'joblib',
        'matplotlib',
        'numpy',
        'pandas',
        'scikit-learn',
        'scipy',
        'torch',
        'tqdm',
    ],
    extras_require={
        'tests': [
            'flake8',
            'pytest',
            'pytest-bootstrap',
            'pytest-cov',
            'statsmodels',
        ],
        'docs': [
            'sphinx',
        ],
    }
)
