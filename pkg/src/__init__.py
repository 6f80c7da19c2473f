# Magnetic tunneling toolkit
