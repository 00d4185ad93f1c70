"""Configure Django settings before the test modules are collected"""
import os

import django

os.environ.setdefault('DJANGO_SETTINGS_MODULE', 'filltune_site.settings')
django.setup()
