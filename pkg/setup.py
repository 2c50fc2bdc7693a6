from setuptools import find_packages, setup

setup(
    name='degdiff',
    packages=find_packages(include=['src', 'src.*', 'project_config']),
    python_requires='>=3.10',
    install_requires=[
        'numpy==2.2.2',
        'scipy==1.15.1',
        'pydantic==2.10.5',
        'ruamel.yaml==0.18.10',
        'fastapi==0.115.6',
        'uvicorn==0.34.0',
        'python-dotenv==1.0.1'
    ],
    extras_require={
        'test': [
            'pytest==8.3.4',
            'httpx==0.28.1'
        ],
    },
    entry_points={
        'console_scripts': ['degdiff=src.cli.main:main'],
    },
)
